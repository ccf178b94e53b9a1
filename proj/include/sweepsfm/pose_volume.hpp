#pragma once

#include <array>
#include <vector>

#include "sweepsfm/depth_volume.hpp"
#include "sweepsfm/geometry.hpp"

namespace sweepsfm {

/// Discrete pose hypotheses around a center pose. Candidates perturb either
/// the rotation (intrinsic Z-Y-X Euler deltas, right-multiplied onto the
/// center rotation) or the translation (additive deltas), never both.
struct PoseCandidateSet {
  Pose center;
  std::vector<Pose> poses;
  std::vector<Eigen::Vector3d> d_euler;  // radians
  std::vector<Eigen::Vector3d> d_trans;  // meters
  /// (kind, ix, iy, iz): kind 0 = center, 1 = rotation grid, 2 = translation
  /// grid; i* are signed grid steps. Used to pair mirrored candidates.
  std::vector<std::array<int, 4>> grid_id;
  double rot_bin = 0.0;
  double trans_bin = 0.0;

  int size() const { return static_cast<int>(poses.size()); }
};

/// Uniform {-k..k}^3 grids over Euler-angle and translation offsets with
/// k = (n_per_axis - 1) / 2; the shared center appears once, giving
/// 2 * n^3 - 1 candidates. The translation step is trans_bin_scale times the
/// norm of the center translation unless `trans_norm` overrides that norm.
/// n_per_axis must be odd.
PoseCandidateSet sample_poses(const Pose& center, double rot_bin, double trans_bin_scale,
                              int n_per_axis, double trans_norm = -1.0);

/// Per-candidate matching scores, lower = better. Candidates with no valid
/// coverage carry +infinity.
struct PoseCostVolume {
  std::vector<double> scores;

  int size() const { return static_cast<int>(scores.size()); }
};

/// Scores every candidate target pose by warping each source onto the target
/// through the fixed initial target depth: photometric mean absolute feature
/// difference plus w_geo times the relative residual between the warped
/// source depth and the candidate-transformed target depth, averaged over
/// covered pixels and then over sources (sorted cross-source sum). Throws
/// when the target depth has no valid pixel.
PoseCostVolume build_pcv(const FeatureMap& target, const DepthMap& target_depth,
                         const std::vector<SourceView>& sources, const CameraIntrinsics& K,
                         const PoseCandidateSet& candidates,
                         const VolumeParams& params = {});

struct PoseOffsets {
  Eigen::Vector3d d_euler = Eigen::Vector3d::Zero();
  Eigen::Vector3d d_trans = Eigen::Vector3d::Zero();
};

/// Softmax(-beta * score) expectation of the candidate offsets in delta
/// space. Mirrored grid pairs are accumulated jointly so symmetric scores
/// yield exactly zero offsets. Throws when every score is infinite.
PoseOffsets regress_pose_offsets(const PoseCostVolume& scores,
                                 const PoseCandidateSet& candidates, double beta);

/// Composes offsets onto a center pose: rotation right-multiplied by the
/// Euler delta, translation added.
Pose apply_pose_offsets(const Pose& center, const PoseOffsets& offsets);

/// Soft-argmax pose: apply_pose_offsets(center, regress_pose_offsets(...)).
Pose regress_pose(const PoseCostVolume& scores, const PoseCandidateSet& candidates,
                  double beta);

}  // namespace sweepsfm

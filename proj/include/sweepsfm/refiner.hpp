#pragma once

#include <iosfwd>
#include <vector>

#include "sweepsfm/depth_volume.hpp"
#include "sweepsfm/features.hpp"
#include "sweepsfm/geometry.hpp"
#include "sweepsfm/image.hpp"
#include "sweepsfm/metrics.hpp"

namespace sweepsfm {

/// Everything the alternation operates on. Depth maps live at feature
/// resolution; poses are world-to-camera; one shared intrinsics for all
/// frames (full image resolution).
struct SceneState {
  CameraIntrinsics intrinsics;
  std::vector<Image> images;
  std::vector<FeatureMap> features;
  std::vector<DepthMap> depths;
  std::vector<Pose> poses;
  int iteration = 0;

  int frame_count() const { return static_cast<int>(images.size()); }
};

struct RefineConfig {
  int iterations = 4;
  int planes = 64;
  /// Nearest plane depth; values <= 0 select 0.8x the smallest valid depth
  /// of the current state.
  double d_min = 0.0;
  double beta_depth = 60.0;
  double beta_pose = 300.0;
  double rot_bin = 0.035;
  double trans_bin_scale = 0.10;
  int pose_grid = 5;
  double w_geo = 1.0;
  int smooth_l = 1;
  int smooth_x = 2;
  int smooth_y = 2;
  DepthSampling depth_sampling = DepthSampling::kNearest;
  bool edge_aware = false;
  /// Update order inside one iteration; default refreshes depth first so
  /// pose scoring sees the newest target depth.
  bool pose_then_depth = false;
  /// Fraction of the regressed pose offset applied per iteration. Both ends
  /// of a frame pair correct the shared relative error simultaneously under
  /// the Jacobi sweep, so a full step (1.0) over-corrects it twice and
  /// oscillates; 0.5 cancels the doubling.
  double pose_damping = 0.5;
};

struct SceneGt {
  std::vector<Pose> poses;
  std::vector<DepthMap> depths;
};

/// Per-iteration error summary (means over frames / frame pairs).
struct IterationStats {
  int iteration = 0;
  double abs_rel = 0.0;
  double l1_inv = 0.0;
  double rot_deg = 0.0;
  double trans_deg = 0.0;
};

/// Validates list lengths and n >= 2; extracts features when absent.
SceneState make_scene_state(const CameraIntrinsics& intrinsics, std::vector<Image> images,
                            std::vector<DepthMap> depths, std::vector<Pose> poses);

/// Rescales every translation and depth by ref_norm / |t_ref|, where t_ref is
/// the first nonzero relative translation over frame pairs in lexicographic
/// order. Throws when all relative translations vanish.
SceneState normalize_scale(SceneState state, double ref_norm);

/// One Jacobi sweep: every frame refreshes its depth from a D-CV against all
/// other frames of the pre-iteration snapshot, then its pose from a P-CV
/// (using its fresh depth). Order-independent across frames.
SceneState refine_once(const SceneState& state, const RefineConfig& config);

/// Runs refine_once `config.iterations` times. With ground truth supplied the
/// per-iteration stats (entry 0 = initialization) are appended to `history`
/// and one line per iteration goes to `log`.
SceneState refine(SceneState state, const RefineConfig& config, const SceneGt* gt = nullptr,
                  std::vector<IterationStats>* history = nullptr,
                  std::ostream* log = nullptr);

/// Mean depth metrics over frames plus mean relative-pose errors over frame
/// pairs.
IterationStats evaluate_state(const SceneState& state, const SceneGt& gt);

}  // namespace sweepsfm

#pragma once

#include <vector>

#include "sweepsfm/features.hpp"
#include "sweepsfm/geometry.hpp"
#include "sweepsfm/image.hpp"

namespace sweepsfm {

/// L fronto-parallel depth hypotheses, uniformly spaced in inverse depth:
/// 1/d_l = (l+1)/L * (1/d_min), so depths run far-to-near and d_{L-1} = d_min.
struct PlaneSet {
  std::vector<double> depths;
  double d_min = 0.0;

  int size() const { return static_cast<int>(depths.size()); }
  /// Spacing of the inverse-depth grid.
  double idepth_step() const { return (1.0 / d_min) / size(); }
};

PlaneSet sample_planes(double d_min, int count);

enum class DepthSampling { kNearest, kBilinear };

/// One source frame as seen from a target: non-owning views plus its
/// world-to-camera pose.
struct SourceView {
  const FeatureMap* features = nullptr;
  const DepthMap* depth = nullptr;
  Pose pose;
};

/// Warps `src` onto the target's virtual plane at `plane_depth` using
/// bilinear interpolation; pixels without source coverage are zero.
FeatureMap warp_feature_bilinear(const FeatureMap& src, const CameraIntrinsics& K,
                                 const Pose& rel, double plane_depth);

/// Same warp with nearest-neighbor sampling of a depth map; uncovered or
/// invalid-source pixels are invalid.
DepthMap warp_depth_nn(const DepthMap& src, const CameraIntrinsics& K, const Pose& rel,
                       double plane_depth);

/// Bilinear variant of the depth warp (ablation path); invalid whenever any
/// of the four taps is invalid or out of range.
DepthMap warp_depth_bilinear(const DepthMap& src, const CameraIntrinsics& K,
                             const Pose& rel, double plane_depth);

/// Depth of the virtual plane `plane_depth` as seen from the source view:
/// per pixel, the z-component of rel * unproject(K, u, plane_depth).
DepthMap plane_depth_in_source(double plane_depth, const CameraIntrinsics& K,
                               const Pose& rel);

/// Raw per-source cost tensor of shape (2*CH + 2) x L x W x H. Per plane the
/// channels are [target features | warped source features | warped source
/// depth | plane depth in source]. Stored cell-major; see raw_at.
struct DepthCostVolume {
  int channels = 0;  // 2*CH + 2
  int planes = 0;
  int width = 0;
  int height = 0;
  std::vector<float> raw;

  DepthCostVolume() = default;
  DepthCostVolume(int feature_channels, int planes, int width, int height);

  float raw_at(int c, int l, int x, int y) const {
    return raw[((static_cast<size_t>(l) * height + y) * width + x) * channels + c];
  }
  float& raw_at(int c, int l, int x, int y) {
    return raw[((static_cast<size_t>(l) * height + y) * width + x) * channels + c];
  }
};

/// Aggregated L x W x H matching cost (lower = better).
struct CostVolume {
  int planes = 0;
  int width = 0;
  int height = 0;
  std::vector<float> cost;

  CostVolume() = default;
  CostVolume(int planes, int width, int height);

  float at(int l, int x, int y) const {
    return cost[(static_cast<size_t>(l) * height + y) * width + x];
  }
  float& at(int l, int x, int y) {
    return cost[(static_cast<size_t>(l) * height + y) * width + x];
  }

  bool operator==(const CostVolume& other) const = default;
};

struct VolumeParams {
  double w_geo = 1.0;
  int smooth_l = 1;
  int smooth_x = 2;
  int smooth_y = 2;
  DepthSampling depth_sampling = DepthSampling::kNearest;
  /// One extra edge-aware smoothing pass guided by target-feature contrast.
  bool edge_aware = false;
};

/// Builds the raw volumes, one per source. All maps must share one
/// resolution; at least one source is required.
std::vector<DepthCostVolume> build_dcv(const FeatureMap& target,
                                       const std::vector<SourceView>& sources,
                                       const Pose& target_pose, const CameraIntrinsics& K,
                                       const PlaneSet& planes,
                                       DepthSampling depth_sampling = DepthSampling::kNearest);

/// Reduces raw volumes to the aggregated cost: per source, mean absolute
/// feature difference plus w_geo times the relative depth residual (skipped
/// where the warped depth is invalid), box-smoothed over (l, x, y), then
/// averaged across sources. The cross-source mean sums values in sorted
/// order, so the result is bit-exact under source permutation.
CostVolume aggregate_dcv(const std::vector<DepthCostVolume>& raw_volumes,
                         const VolumeParams& params = {},
                         const FeatureMap* guide = nullptr);

/// build_dcv + aggregate_dcv holding only one raw volume at a time.
CostVolume compute_depth_cost(const FeatureMap& target, const std::vector<SourceView>& sources,
                              const Pose& target_pose, const CameraIntrinsics& K,
                              const PlaneSet& planes, const VolumeParams& params = {});

/// Soft-argmax depth: d(u) = sum_l softmax_l(-beta * cost(l, u)) * d_l.
DepthMap regress_depth(const CostVolume& aggregated, const PlaneSet& planes, double beta);

/// Writes the aggregated volume as "DCV L W H\n" followed by little-endian
/// 32-bit floats in (l, y, x) order.
void dump_cost_volume(const CostVolume& volume, const std::string& path);

}  // namespace sweepsfm

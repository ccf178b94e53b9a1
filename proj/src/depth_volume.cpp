#include "sweepsfm/depth_volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace sweepsfm {

namespace {

void check_same_resolution(const FeatureMap& target, const std::vector<SourceView>& sources) {
  if (sources.empty()) {
    throw std::invalid_argument("cost volume: at least one source view required");
  }
  for (const SourceView& s : sources) {
    if (s.features == nullptr || s.depth == nullptr) {
      throw std::invalid_argument("cost volume: source view missing feature or depth map");
    }
    if (s.features->width != target.width || s.features->height != target.height ||
        s.features->channels != target.channels || s.depth->width() != target.width ||
        s.depth->height() != target.height) {
      throw std::invalid_argument("cost volume: resolution mismatch between target and source");
    }
  }
}

// Bilinear taps clamped to the grid; callers gate on warp_coord validity.
void sample_features(const FeatureMap& src, double u, double v, float* out) {
  const int x0 = std::clamp(static_cast<int>(std::floor(u)), 0, src.width - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor(v)), 0, src.height - 1);
  const int x1 = std::min(x0 + 1, src.width - 1);
  const int y1 = std::min(y0 + 1, src.height - 1);
  const float ax = static_cast<float>(u - std::floor(u));
  const float ay = static_cast<float>(v - std::floor(v));
  const float w00 = (1.0f - ax) * (1.0f - ay);
  const float w10 = ax * (1.0f - ay);
  const float w01 = (1.0f - ax) * ay;
  const float w11 = ax * ay;
  const float* p00 = src.cell(x0, y0);
  const float* p10 = src.cell(x1, y0);
  const float* p01 = src.cell(x0, y1);
  const float* p11 = src.cell(x1, y1);
  for (int c = 0; c < src.channels; ++c) {
    out[c] = w00 * p00[c] + w10 * p10[c] + w01 * p01[c] + w11 * p11[c];
  }
}

// Single box-smoothing pass along one axis of the (l, y, x) grid, with
// truncated windows renormalized at the borders.
void smooth_axis(CostVolume& vol, int radius, int axis) {
  if (radius <= 0) return;
  const int dims[3] = {vol.planes, vol.height, vol.width};
  const int n = dims[axis];
  std::vector<float> line(n);
  const int outer0 = dims[(axis + 1) % 3];
  const int outer1 = dims[(axis + 2) % 3];
  for (int a = 0; a < outer0; ++a) {
    for (int b = 0; b < outer1; ++b) {
      int idx[3];
      idx[(axis + 1) % 3] = a;
      idx[(axis + 2) % 3] = b;
      for (int i = 0; i < n; ++i) {
        idx[axis] = i;
        line[i] = vol.at(idx[0], idx[2], idx[1]);
      }
      for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - radius);
        const int hi = std::min(n - 1, i + radius);
        double sum = 0.0;
        for (int j = lo; j <= hi; ++j) sum += line[j];
        idx[axis] = i;
        vol.at(idx[0], idx[2], idx[1]) = static_cast<float>(sum / (hi - lo + 1));
      }
    }
  }
}

void box_smooth(CostVolume& vol, const VolumeParams& p) {
  smooth_axis(vol, p.smooth_l, 0);
  smooth_axis(vol, p.smooth_y, 1);
  smooth_axis(vol, p.smooth_x, 2);
}

// 3x3 smoothing per plane slice that down-weights neighbors across feature
// edges of the guide map.
void edge_aware_smooth(CostVolume& vol, const FeatureMap& guide) {
  constexpr float kKappa = 8.0f;
  std::vector<float> slice(static_cast<size_t>(vol.width) * vol.height);
  for (int l = 0; l < vol.planes; ++l) {
    for (int y = 0; y < vol.height; ++y) {
      for (int x = 0; x < vol.width; ++x) {
        slice[static_cast<size_t>(y) * vol.width + x] = vol.at(l, x, y);
      }
    }
    for (int y = 0; y < vol.height; ++y) {
      for (int x = 0; x < vol.width; ++x) {
        double num = 0.0;
        double den = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx;
            const int ny = y + dy;
            if (nx < 0 || nx >= vol.width || ny < 0 || ny >= vol.height) continue;
            float diff = 0.0f;
            for (int c = 0; c < guide.channels; ++c) {
              diff += std::abs(guide.at(x, y, c) - guide.at(nx, ny, c));
            }
            const float w = std::exp(-kKappa * diff / guide.channels);
            num += w * slice[static_cast<size_t>(ny) * vol.width + nx];
            den += w;
          }
        }
        vol.at(l, x, y) = static_cast<float>(num / den);
      }
    }
  }
}

// Photometric + geometric matching cost of one raw volume.
CostVolume per_source_cost(const DepthCostVolume& raw, double w_geo) {
  const int ch = (raw.channels - 2) / 2;
  CostVolume out(raw.planes, raw.width, raw.height);
  for (int l = 0; l < raw.planes; ++l) {
    for (int y = 0; y < raw.height; ++y) {
      for (int x = 0; x < raw.width; ++x) {
        double photo = 0.0;
        for (int c = 0; c < ch; ++c) {
          photo += std::abs(raw.raw_at(c, l, x, y) - raw.raw_at(ch + c, l, x, y));
        }
        double cost = photo / ch;
        const float warped_depth = raw.raw_at(2 * ch, l, x, y);
        const float plane_depth = raw.raw_at(2 * ch + 1, l, x, y);
        if (warped_depth > 0.0f && plane_depth > kZEps) {
          cost += w_geo * std::abs(warped_depth - plane_depth) / warped_depth;
        }
        out.at(l, x, y) = static_cast<float>(cost);
      }
    }
  }
  return out;
}

// Mean across sources with per-cell sorted summation, so the result does not
// depend on source order.
CostVolume sorted_mean(std::vector<CostVolume> vols) {
  if (vols.size() == 1) return std::move(vols.front());
  CostVolume out = vols.front();
  const size_t cells = out.cost.size();
  std::vector<float> vals(vols.size());
  for (size_t i = 0; i < cells; ++i) {
    for (size_t s = 0; s < vols.size(); ++s) vals[s] = vols[s].cost[i];
    std::sort(vals.begin(), vals.end());
    double sum = 0.0;
    for (float v : vals) sum += v;
    out.cost[i] = static_cast<float>(sum / vols.size());
  }
  return out;
}

DepthCostVolume build_dcv_one(const FeatureMap& target, const SourceView& source,
                              const Pose& rel, const CameraIntrinsics& K,
                              const PlaneSet& planes, DepthSampling depth_sampling) {
  const int ch = target.channels;
  DepthCostVolume vol(ch, planes.size(), target.width, target.height);
  for (int l = 0; l < planes.size(); ++l) {
    const double d = planes.depths[l];
    const FeatureMap warped = warp_feature_bilinear(*source.features, K, rel, d);
    const DepthMap warped_depth = depth_sampling == DepthSampling::kNearest
                                      ? warp_depth_nn(*source.depth, K, rel, d)
                                      : warp_depth_bilinear(*source.depth, K, rel, d);
    const DepthMap plane_src = plane_depth_in_source(d, K, rel);
    for (int y = 0; y < target.height; ++y) {
      for (int x = 0; x < target.width; ++x) {
        float* cell = &vol.raw_at(0, l, x, y);
        const float* tf = target.cell(x, y);
        const float* wf = warped.cell(x, y);
        std::copy(tf, tf + ch, cell);
        std::copy(wf, wf + ch, cell + ch);
        cell[2 * ch] = warped_depth.valid_at(x, y) ? warped_depth.at(x, y) : 0.0f;
        cell[2 * ch + 1] = plane_src.at(x, y);
      }
    }
  }
  return vol;
}

}  // namespace

PlaneSet sample_planes(double d_min, int count) {
  if (!(d_min > 0.0)) {
    throw std::invalid_argument("sample_planes: d_min must be positive");
  }
  if (count < 2) {
    throw std::invalid_argument("sample_planes: need at least two planes");
  }
  PlaneSet out;
  out.d_min = d_min;
  out.depths.resize(count);
  for (int l = 0; l < count; ++l) {
    out.depths[l] = static_cast<double>(count) * d_min / (l + 1);
  }
  return out;
}

DepthCostVolume::DepthCostVolume(int feature_channels, int planes_, int width_, int height_)
    : channels(2 * feature_channels + 2), planes(planes_), width(width_), height(height_) {
  raw.assign(static_cast<size_t>(channels) * planes * width * height, 0.0f);
}

CostVolume::CostVolume(int planes_, int width_, int height_)
    : planes(planes_), width(width_), height(height_) {
  cost.assign(static_cast<size_t>(planes) * width * height, 0.0f);
}

FeatureMap warp_feature_bilinear(const FeatureMap& src, const CameraIntrinsics& K,
                                 const Pose& rel, double plane_depth) {
  FeatureMap out(src.width, src.height, src.channels);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const PixelCoord w = warp_coord(K, x, y, plane_depth, rel);
      if (!w.valid) continue;  // stays zero
      sample_features(src, w.u, w.v, &out.at(x, y, 0));
    }
  }
  return out;
}

DepthMap warp_depth_nn(const DepthMap& src, const CameraIntrinsics& K, const Pose& rel,
                       double plane_depth) {
  DepthMap out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      const PixelCoord w = warp_coord(K, x, y, plane_depth, rel);
      if (!w.valid) continue;
      const int sx = std::clamp(static_cast<int>(std::lround(w.u)), 0, src.width() - 1);
      const int sy = std::clamp(static_cast<int>(std::lround(w.v)), 0, src.height() - 1);
      if (src.valid_at(sx, sy)) {
        out.set(x, y, src.at(sx, sy));
      }
    }
  }
  return out;
}

DepthMap warp_depth_bilinear(const DepthMap& src, const CameraIntrinsics& K,
                             const Pose& rel, double plane_depth) {
  DepthMap out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      const PixelCoord w = warp_coord(K, x, y, plane_depth, rel);
      if (!w.valid) continue;
      const int x0 = static_cast<int>(std::floor(w.u));
      const int y0 = static_cast<int>(std::floor(w.v));
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const int y1 = std::min(y0 + 1, src.height() - 1);
      if (x0 < 0 || y0 < 0 || !src.valid_at(x0, y0) || !src.valid_at(x1, y0) ||
          !src.valid_at(x0, y1) || !src.valid_at(x1, y1)) {
        continue;
      }
      const float ax = static_cast<float>(w.u - x0);
      const float ay = static_cast<float>(w.v - y0);
      const float top = (1.0f - ax) * src.at(x0, y0) + ax * src.at(x1, y0);
      const float bot = (1.0f - ax) * src.at(x0, y1) + ax * src.at(x1, y1);
      out.set(x, y, (1.0f - ay) * top + ay * bot);
    }
  }
  return out;
}

DepthMap plane_depth_in_source(double plane_depth, const CameraIntrinsics& K,
                               const Pose& rel) {
  DepthMap out(K.width, K.height);
  const Eigen::Matrix3d r = rel.rotation();
  const Eigen::Vector3d row_z = r.row(2);
  const double tz = rel.translation().z();
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const Eigen::Vector3d p = unproject(K, x, y, plane_depth);
      out.set(x, y, static_cast<float>(row_z.dot(p) + tz));
    }
  }
  return out;
}

std::vector<DepthCostVolume> build_dcv(const FeatureMap& target,
                                       const std::vector<SourceView>& sources,
                                       const Pose& target_pose, const CameraIntrinsics& K,
                                       const PlaneSet& planes,
                                       DepthSampling depth_sampling) {
  check_same_resolution(target, sources);
  if (K.width != target.width || K.height != target.height) {
    throw std::invalid_argument("build_dcv: intrinsics do not match the feature grid");
  }
  std::vector<DepthCostVolume> out;
  out.reserve(sources.size());
  for (const SourceView& s : sources) {
    out.push_back(build_dcv_one(target, s, relative(target_pose, s.pose), K, planes,
                                depth_sampling));
  }
  return out;
}

CostVolume aggregate_dcv(const std::vector<DepthCostVolume>& raw_volumes,
                         const VolumeParams& params, const FeatureMap* guide) {
  if (raw_volumes.empty()) {
    throw std::invalid_argument("aggregate_dcv: no raw volumes");
  }
  if (params.edge_aware && guide == nullptr) {
    throw std::invalid_argument("aggregate_dcv: edge-aware pass needs a guide feature map");
  }
  std::vector<CostVolume> costs;
  costs.reserve(raw_volumes.size());
  for (const DepthCostVolume& raw : raw_volumes) {
    CostVolume c = per_source_cost(raw, params.w_geo);
    box_smooth(c, params);
    costs.push_back(std::move(c));
  }
  CostVolume out = sorted_mean(std::move(costs));
  if (params.edge_aware) {
    edge_aware_smooth(out, *guide);
  }
  return out;
}

CostVolume compute_depth_cost(const FeatureMap& target, const std::vector<SourceView>& sources,
                              const Pose& target_pose, const CameraIntrinsics& K,
                              const PlaneSet& planes, const VolumeParams& params) {
  check_same_resolution(target, sources);
  std::vector<CostVolume> costs;
  costs.reserve(sources.size());
  for (const SourceView& s : sources) {
    const DepthCostVolume raw = build_dcv_one(target, s, relative(target_pose, s.pose), K,
                                              planes, params.depth_sampling);
    CostVolume c = per_source_cost(raw, params.w_geo);
    box_smooth(c, params);
    costs.push_back(std::move(c));
  }
  CostVolume out = sorted_mean(std::move(costs));
  if (params.edge_aware) {
    edge_aware_smooth(out, target);
  }
  return out;
}

DepthMap regress_depth(const CostVolume& aggregated, const PlaneSet& planes, double beta) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument("regress_depth: beta must be positive");
  }
  if (aggregated.planes != planes.size()) {
    throw std::invalid_argument("regress_depth: plane count mismatch");
  }
  DepthMap out(aggregated.width, aggregated.height);
  for (int y = 0; y < aggregated.height; ++y) {
    for (int x = 0; x < aggregated.width; ++x) {
      double best = aggregated.at(0, x, y);
      for (int l = 1; l < aggregated.planes; ++l) {
        best = std::min(best, static_cast<double>(aggregated.at(l, x, y)));
      }
      double wsum = 0.0;
      double dsum = 0.0;
      for (int l = 0; l < aggregated.planes; ++l) {
        const double w = std::exp(-beta * (aggregated.at(l, x, y) - best));
        wsum += w;
        dsum += w * planes.depths[l];
      }
      out.set(x, y, static_cast<float>(dsum / wsum));
    }
  }
  return out;
}

void dump_cost_volume(const CostVolume& volume, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("dump_cost_volume: cannot open " + path);
  }
  char header[64];
  const int n =
      std::snprintf(header, sizeof(header), "DCV %d %d %d\n", volume.planes, volume.width,
                    volume.height);
  f.write(header, n);
  f.write(reinterpret_cast<const char*>(volume.cost.data()),
          static_cast<std::streamsize>(volume.cost.size() * sizeof(float)));
  if (!f) {
    throw std::runtime_error("dump_cost_volume: write failed for " + path);
  }
}

}  // namespace sweepsfm

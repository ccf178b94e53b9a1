#include "sweepsfm/pose_volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace sweepsfm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double score_candidate_source(const FeatureMap& target, const DepthMap& target_depth,
                              const SourceView& source, const CameraIntrinsics& K,
                              const Pose& rel, double w_geo) {
  const Eigen::Matrix3d r = rel.rotation();
  const Eigen::Vector3d t = rel.translation();
  double sum = 0.0;
  long count = 0;
  std::vector<float> sampled(target.channels);
  for (int y = 0; y < target.height; ++y) {
    for (int x = 0; x < target.width; ++x) {
      if (!target_depth.valid_at(x, y)) continue;
      const double d = target_depth.at(x, y);
      const Eigen::Vector3d p = r * unproject(K, x, y, d) + t;
      const PixelCoord w = project(K, p);
      if (!w.valid || w.u < 0.0 || w.u >= K.width || w.v < 0.0 || w.v >= K.height) {
        continue;  // out of view: excluded from the mean
      }
      const int x0 = std::clamp(static_cast<int>(std::floor(w.u)), 0, target.width - 1);
      const int y0 = std::clamp(static_cast<int>(std::floor(w.v)), 0, target.height - 1);
      const int x1 = std::min(x0 + 1, target.width - 1);
      const int y1 = std::min(y0 + 1, target.height - 1);
      const float ax = static_cast<float>(w.u - std::floor(w.u));
      const float ay = static_cast<float>(w.v - std::floor(w.v));
      const float w00 = (1.0f - ax) * (1.0f - ay);
      const float w10 = ax * (1.0f - ay);
      const float w01 = (1.0f - ax) * ay;
      const float w11 = ax * ay;
      const float* p00 = source.features->cell(x0, y0);
      const float* p10 = source.features->cell(x1, y0);
      const float* p01 = source.features->cell(x0, y1);
      const float* p11 = source.features->cell(x1, y1);
      double photo = 0.0;
      const float* tf = target.cell(x, y);
      for (int c = 0; c < target.channels; ++c) {
        const float s = w00 * p00[c] + w10 * p10[c] + w01 * p01[c] + w11 * p11[c];
        photo += std::abs(tf[c] - s);
      }
      double cost = photo / target.channels;
      const int sx = std::clamp(static_cast<int>(std::lround(w.u)), 0, target.width - 1);
      const int sy = std::clamp(static_cast<int>(std::lround(w.v)), 0, target.height - 1);
      if (source.depth->valid_at(sx, sy) && p.z() > kZEps) {
        cost += w_geo * std::abs(source.depth->at(sx, sy) - p.z()) / p.z();
      }
      sum += cost;
      ++count;
    }
  }
  if (count == 0) return kInf;
  return sum / count;
}

}  // namespace

PoseCandidateSet sample_poses(const Pose& center, double rot_bin, double trans_bin_scale,
                              int n_per_axis, double trans_norm) {
  if (n_per_axis < 1 || n_per_axis % 2 == 0) {
    throw std::invalid_argument("sample_poses: n_per_axis must be odd and >= 1");
  }
  if (trans_norm < 0.0) {
    trans_norm = center.translation().norm();
  }
  PoseCandidateSet out;
  out.center = center;
  out.rot_bin = rot_bin;
  out.trans_bin = trans_bin_scale * trans_norm;

  const int k = (n_per_axis - 1) / 2;
  out.poses.push_back(center);
  out.d_euler.emplace_back(Eigen::Vector3d::Zero());
  out.d_trans.emplace_back(Eigen::Vector3d::Zero());
  out.grid_id.push_back({0, 0, 0, 0});

  for (int ix = -k; ix <= k; ++ix) {
    for (int iy = -k; iy <= k; ++iy) {
      for (int iz = -k; iz <= k; ++iz) {
        if (ix == 0 && iy == 0 && iz == 0) continue;
        const Eigen::Vector3d de(ix * out.rot_bin, iy * out.rot_bin, iz * out.rot_bin);
        Eigen::Quaterniond q =
            center.quaternion() * Eigen::Quaterniond(euler_zyx_to_rotation(de));
        q.normalize();
        out.poses.emplace_back(q, center.translation());
        out.d_euler.push_back(de);
        out.d_trans.emplace_back(Eigen::Vector3d::Zero());
        out.grid_id.push_back({1, ix, iy, iz});
      }
    }
  }
  for (int ix = -k; ix <= k; ++ix) {
    for (int iy = -k; iy <= k; ++iy) {
      for (int iz = -k; iz <= k; ++iz) {
        if (ix == 0 && iy == 0 && iz == 0) continue;
        const Eigen::Vector3d dt(ix * out.trans_bin, iy * out.trans_bin, iz * out.trans_bin);
        out.poses.emplace_back(center.quaternion(), center.translation() + dt);
        out.d_euler.emplace_back(Eigen::Vector3d::Zero());
        out.d_trans.push_back(dt);
        out.grid_id.push_back({2, ix, iy, iz});
      }
    }
  }
  return out;
}

PoseCostVolume build_pcv(const FeatureMap& target, const DepthMap& target_depth,
                         const std::vector<SourceView>& sources, const CameraIntrinsics& K,
                         const PoseCandidateSet& candidates, const VolumeParams& params) {
  if (sources.empty()) {
    throw std::invalid_argument("build_pcv: at least one source view required");
  }
  if (target_depth.valid_count() == 0) {
    throw std::invalid_argument("build_pcv: target depth has no valid pixel");
  }
  for (const SourceView& s : sources) {
    if (s.features == nullptr || s.depth == nullptr ||
        s.features->width != target.width || s.features->height != target.height ||
        s.features->channels != target.channels) {
      throw std::invalid_argument("build_pcv: source/target resolution mismatch");
    }
  }

  PoseCostVolume out;
  out.scores.resize(candidates.size(), kInf);
  std::vector<double> per_source(sources.size());
  for (int p = 0; p < candidates.size(); ++p) {
    bool covered = true;
    for (size_t s = 0; s < sources.size(); ++s) {
      const Pose rel = relative(candidates.poses[p], sources[s].pose);
      per_source[s] = score_candidate_source(target, target_depth, sources[s], K, rel,
                                             params.w_geo);
      if (std::isinf(per_source[s])) {
        covered = false;
        break;
      }
    }
    if (!covered) continue;
    std::sort(per_source.begin(), per_source.end());
    double sum = 0.0;
    for (double v : per_source) sum += v;
    out.scores[p] = sum / static_cast<double>(sources.size());
  }
  return out;
}

PoseOffsets regress_pose_offsets(const PoseCostVolume& scores,
                                 const PoseCandidateSet& candidates, double beta) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument("regress_pose: beta must be positive");
  }
  if (scores.size() != candidates.size()) {
    throw std::invalid_argument("regress_pose: score/candidate count mismatch");
  }
  double best = kInf;
  for (double s : scores.scores) best = std::min(best, s);
  if (std::isinf(best)) {
    throw std::invalid_argument("regress_pose: all candidates scored infinite");
  }

  std::vector<double> w(scores.size(), 0.0);
  double wsum = 0.0;
  for (int p = 0; p < scores.size(); ++p) {
    if (std::isinf(scores.scores[p])) continue;
    w[p] = std::exp(-beta * (scores.scores[p] - best));
    wsum += w[p];
  }

  // Accumulate mirrored grid pairs jointly: w_p * d + w_m * (-d) folds to
  // (w_p - w_m) * d, which cancels exactly for symmetric scores.
  std::map<std::array<int, 4>, int> index_of;
  for (int p = 0; p < candidates.size(); ++p) {
    index_of[candidates.grid_id[p]] = p;
  }
  PoseOffsets out;
  for (int p = 0; p < candidates.size(); ++p) {
    const auto& id = candidates.grid_id[p];
    if (id[0] == 0) continue;  // center contributes zero offsets
    const std::array<int, 4> mirror = {id[0], -id[1], -id[2], -id[3]};
    const int q = index_of.at(mirror);
    if (q < p) continue;  // pair already handled
    const double dw = w[p] - w[q];
    out.d_euler += dw * candidates.d_euler[p];
    out.d_trans += dw * candidates.d_trans[p];
  }
  out.d_euler /= wsum;
  out.d_trans /= wsum;
  return out;
}

Pose apply_pose_offsets(const Pose& center, const PoseOffsets& offsets) {
  Eigen::Quaterniond q =
      center.quaternion() * Eigen::Quaterniond(euler_zyx_to_rotation(offsets.d_euler));
  q.normalize();
  return Pose(q, center.translation() + offsets.d_trans);
}

Pose regress_pose(const PoseCostVolume& scores, const PoseCandidateSet& candidates,
                  double beta) {
  return apply_pose_offsets(candidates.center, regress_pose_offsets(scores, candidates, beta));
}

}  // namespace sweepsfm

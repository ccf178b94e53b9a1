#include "sweepsfm/refiner.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "sweepsfm/pose_volume.hpp"

namespace sweepsfm {

namespace {

void check_state(const SceneState& state) {
  const size_t n = state.images.size();
  if (n < 2) {
    throw std::invalid_argument("scene state: need at least two frames");
  }
  if (state.features.size() != n || state.depths.size() != n || state.poses.size() != n) {
    throw std::invalid_argument("scene state: frame list lengths differ");
  }
}

double auto_d_min(const SceneState& state) {
  float best = 0.0f;
  for (const DepthMap& d : state.depths) {
    const float m = d.min_valid();
    if (m > 0.0f && (best == 0.0f || m < best)) best = m;
  }
  if (best <= 0.0f) {
    throw std::invalid_argument("refine: no valid depth anywhere in the state");
  }
  return 0.8 * best;
}

// Mean relative-translation norm from frame i to the other frames, summed in
// sorted order so frame permutations cannot change the result.
double baseline_anchor(const SceneState& state, int i) {
  std::vector<double> norms;
  for (int j = 0; j < state.frame_count(); ++j) {
    if (j == i) continue;
    norms.push_back(relative(state.poses[i], state.poses[j]).translation().norm());
  }
  std::sort(norms.begin(), norms.end());
  double sum = 0.0;
  for (double v : norms) sum += v;
  return sum / static_cast<double>(norms.size());
}

VolumeParams volume_params(const RefineConfig& c) {
  VolumeParams p;
  p.w_geo = c.w_geo;
  p.smooth_l = c.smooth_l;
  p.smooth_x = c.smooth_x;
  p.smooth_y = c.smooth_y;
  p.depth_sampling = c.depth_sampling;
  p.edge_aware = c.edge_aware;
  return p;
}

}  // namespace

SceneState make_scene_state(const CameraIntrinsics& intrinsics, std::vector<Image> images,
                            std::vector<DepthMap> depths, std::vector<Pose> poses) {
  SceneState state;
  state.intrinsics = intrinsics;
  state.images = std::move(images);
  state.depths = std::move(depths);
  state.poses = std::move(poses);
  state.features.reserve(state.images.size());
  for (const Image& img : state.images) {
    if (img.width != intrinsics.width || img.height != intrinsics.height) {
      throw std::invalid_argument("make_scene_state: image size differs from intrinsics");
    }
    state.features.push_back(extract_features(img));
  }
  for (const DepthMap& d : state.depths) {
    if (d.width() != intrinsics.width / 4 || d.height() != intrinsics.height / 4) {
      throw std::invalid_argument("make_scene_state: depth maps must be at feature resolution");
    }
  }
  check_state(state);
  return state;
}

SceneState normalize_scale(SceneState state, double ref_norm) {
  check_state(state);
  if (!(ref_norm > 0.0)) {
    throw std::invalid_argument("normalize_scale: ref_norm must be positive");
  }
  double t_ref = 0.0;
  for (int i = 0; i < state.frame_count() && t_ref == 0.0; ++i) {
    for (int j = i + 1; j < state.frame_count() && t_ref == 0.0; ++j) {
      const double n = relative(state.poses[i], state.poses[j]).translation().norm();
      if (n > 1e-12) t_ref = n;
    }
  }
  if (t_ref == 0.0) {
    throw std::invalid_argument("normalize_scale: all relative translations are zero");
  }
  const double s = ref_norm / t_ref;
  for (Pose& p : state.poses) {
    p = p.with_translation(p.translation() * s);
  }
  for (DepthMap& d : state.depths) {
    for (float& v : d.values()) {
      if (v > 0.0f) v = static_cast<float>(v * s);
    }
  }
  return state;
}

SceneState refine_once(const SceneState& state, const RefineConfig& config) {
  check_state(state);
  const CameraIntrinsics kf = state.intrinsics.quarter();
  const VolumeParams vp = volume_params(config);
  const double d_min = config.d_min > 0.0 ? config.d_min : auto_d_min(state);
  const PlaneSet planes = sample_planes(d_min, config.planes);

  SceneState next = state;
  next.iteration = state.iteration + 1;
  for (int i = 0; i < state.frame_count(); ++i) {
    std::vector<SourceView> sources;
    for (int j = 0; j < state.frame_count(); ++j) {
      if (j == i) continue;
      sources.push_back({&state.features[j], &state.depths[j], state.poses[j]});
    }
    const PoseCandidateSet candidates =
        sample_poses(state.poses[i], config.rot_bin, config.trans_bin_scale,
                     config.pose_grid, baseline_anchor(state, i));

    // The pose volume scores against the iteration's initialization depth: a
    // depth map regressed under a wrong pose absorbs that pose error into
    // photo-consistent (but wrong) depths, which would zero out the pose
    // gradient.
    const PoseCostVolume scores =
        build_pcv(state.features[i], state.depths[i], sources, kf, candidates, vp);
    PoseOffsets off = regress_pose_offsets(scores, candidates, config.beta_pose);
    off.d_euler *= config.pose_damping;
    off.d_trans *= config.pose_damping;
    next.poses[i] = apply_pose_offsets(state.poses[i], off);

    const Pose& depth_pose = config.pose_then_depth ? next.poses[i] : state.poses[i];
    const CostVolume cost =
        compute_depth_cost(state.features[i], sources, depth_pose, kf, planes, vp);
    next.depths[i] = regress_depth(cost, planes, config.beta_depth);
  }
  return next;
}

SceneState refine(SceneState state, const RefineConfig& config, const SceneGt* gt,
                  std::vector<IterationStats>* history, std::ostream* log) {
  if (config.iterations < 0) {
    throw std::invalid_argument("refine: iterations must be >= 0");
  }
  auto record = [&](const SceneState& s) {
    if (gt == nullptr) return;
    IterationStats stats = evaluate_state(s, *gt);
    if (history != nullptr) history->push_back(stats);
    if (log != nullptr) {
      *log << "iter " << stats.iteration << " abs_rel=" << stats.abs_rel
           << " l1_inv=" << stats.l1_inv << " rot_deg=" << stats.rot_deg
           << " trans_deg=" << stats.trans_deg << "\n";
    }
  };
  record(state);
  for (int k = 0; k < config.iterations; ++k) {
    state = refine_once(state, config);
    record(state);
  }
  return state;
}

IterationStats evaluate_state(const SceneState& state, const SceneGt& gt) {
  check_state(state);
  if (gt.poses.size() != state.poses.size() || gt.depths.size() != state.depths.size()) {
    throw std::invalid_argument("evaluate_state: ground truth frame count mismatch");
  }
  IterationStats out;
  out.iteration = state.iteration;
  for (int i = 0; i < state.frame_count(); ++i) {
    const DepthMetrics m = depth_metrics(state.depths[i], gt.depths[i]);
    out.abs_rel += m.abs_rel;
    out.l1_inv += m.l1_inv;
  }
  out.abs_rel /= state.frame_count();
  out.l1_inv /= state.frame_count();

  int rot_pairs = 0;
  int trans_pairs = 0;
  for (int i = 0; i < state.frame_count(); ++i) {
    for (int j = i + 1; j < state.frame_count(); ++j) {
      const Pose pred = relative(state.poses[i], state.poses[j]);
      const Pose truth = relative(gt.poses[i], gt.poses[j]);
      out.rot_deg +=
          rotation_angle(pred.rotation() * truth.rotation().transpose()) * 180.0 / M_PI;
      ++rot_pairs;
      if (truth.translation().norm() > 1e-12) {
        out.trans_deg += pose_metrics(pred, truth).trans_deg;
        ++trans_pairs;
      }
    }
  }
  out.rot_deg /= rot_pairs;
  if (trans_pairs > 0) out.trans_deg /= trans_pairs;
  return out;
}

}  // namespace sweepsfm

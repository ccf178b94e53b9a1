#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include "sweepsfm/bundle_io.hpp"
#include "sweepsfm/metrics.hpp"
#include "sweepsfm/refiner.hpp"
#include "sweepsfm/synth.hpp"

namespace fs = std::filesystem;
using namespace sweepsfm;

namespace {

struct PairMetrics {
  DepthMetrics depth;
  PoseMetrics pose;
  bool has_pose = false;
};

// Field-wise means over frames (depth) and frame pairs (relative poses).
PairMetrics summarize(const std::vector<DepthMap>& pred_depths,
                      const std::vector<Pose>& pred_poses, const SceneGt& gt) {
  PairMetrics out;
  const int n = static_cast<int>(pred_depths.size());
  for (int i = 0; i < n; ++i) {
    const DepthMetrics m = depth_metrics(pred_depths[i], gt.depths[i]);
    out.depth.l1_inv += m.l1_inv / n;
    out.depth.sc_inv += m.sc_inv / n;
    out.depth.l1_rel += m.l1_rel / n;
    out.depth.abs_rel += m.abs_rel / n;
    out.depth.abs_diff += m.abs_diff / n;
    out.depth.sq_rel += m.sq_rel / n;
    out.depth.rms += m.rms / n;
    out.depth.log_rms += m.log_rms / n;
    out.depth.delta1 += m.delta1 / n;
    out.depth.delta2 += m.delta2 / n;
    out.depth.delta3 += m.delta3 / n;
  }
  int pairs = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Pose pred = relative(pred_poses[i], pred_poses[j]);
      const Pose truth = relative(gt.poses[i], gt.poses[j]);
      if (truth.translation().norm() <= 1e-12) continue;
      const PoseMetrics pm = pose_metrics(pred, truth);
      out.pose.rot_deg += pm.rot_deg;
      out.pose.trans_deg += pm.trans_deg;
      ++pairs;
    }
  }
  if (pairs > 0) {
    out.pose.rot_deg /= pairs;
    out.pose.trans_deg /= pairs;
    out.has_pose = true;
  }
  return out;
}

SceneGt bundle_gt(const Bundle& b) {
  SceneGt gt;
  gt.poses = *b.gt_poses;
  gt.depths = *b.gt_depths;
  return gt;
}

int run_synth(const std::string& out_dir, const std::string& scene, const std::string& spec_file,
              uint64_t seed, int frames, int width, int height, double baseline,
              double rot_noise, double trans_noise, double depth_noise) {
  SceneSpec spec;
  if (!spec_file.empty()) {
    std::ifstream f(spec_file);
    if (!f) {
      std::cerr << "cannot open scene spec " << spec_file << "\n";
      return 1;
    }
    spec = parse_scene_spec(f);
  } else {
    spec = preset_scene(scene, seed);
  }
  const CameraIntrinsics k(width, width, (width - 1) / 2.0, (height - 1) / 2.0, width,
                           height);
  const std::vector<Pose> cams = preset_cameras(frames, seed, baseline);

  fs::create_directories(fs::path(out_dir) / "images");
  fs::create_directories(fs::path(out_dir) / "depth_init");
  fs::create_directories(fs::path(out_dir) / "depth_gt");
  save_intrinsics(k, fs::path(out_dir) / "intrinsics.txt");
  {
    std::ofstream f(fs::path(out_dir) / "scene.txt");
    f << write_scene_spec(spec);
  }

  std::vector<Pose> init_poses;
  char name[32];
  for (int i = 0; i < frames; ++i) {
    const RenderResult r = render(spec, k, cams[i]);
    const DepthMap gt_depth = render_depth(spec, k.quarter(), cams[i]);
    std::snprintf(name, sizeof(name), "%04d", i);
    save_pnm(r.image, fs::path(out_dir) / "images" / (std::string(name) + ".pgm"));
    save_pfm(gt_depth, fs::path(out_dir) / "depth_gt" / (std::string(name) + ".pfm"));
    // Frame 0 stays clean as the gauge anchor.
    const Eigen::Vector3d rn =
        i == 0 ? Eigen::Vector3d::Zero() : Eigen::Vector3d::Constant(rot_noise);
    const Eigen::Vector3d tn =
        i == 0 ? Eigen::Vector3d::Zero() : Eigen::Vector3d::Constant(trans_noise);
    const PerturbResult p = perturb(cams[i], gt_depth, rn, tn, depth_noise, seed + 31 * i);
    init_poses.push_back(p.pose);
    save_pfm(p.depth, fs::path(out_dir) / "depth_init" / (std::string(name) + ".pfm"));
  }
  save_pose_file(init_poses, fs::path(out_dir) / "poses_init.txt");
  save_pose_file(cams, fs::path(out_dir) / "poses_gt.txt");
  std::cout << "wrote bundle with " << frames << " frames to " << out_dir << "\n";
  return 0;
}

int run_refine(const std::string& bundle_dir, const std::string& out_dir,
               const RefineConfig& config, const std::string& normalize,
               const std::string& dump_dcv) {
  const Bundle bundle = load_bundle(bundle_dir);
  SceneState state = make_scene_state(bundle.intrinsics, bundle.images, bundle.init_depths,
                                      bundle.init_poses);
  const bool has_gt = bundle.gt_poses.has_value() && bundle.gt_depths.has_value();
  if (normalize == "unit") {
    state = normalize_scale(state, 1.0);
  } else if (normalize == "gt") {
    if (!has_gt) {
      std::cerr << "--normalize-scale gt requires ground-truth poses in the bundle\n";
      return 1;
    }
    double ref = 0.0;
    for (size_t i = 0; i < bundle.gt_poses->size() && ref == 0.0; ++i) {
      for (size_t j = i + 1; j < bundle.gt_poses->size() && ref == 0.0; ++j) {
        const double n =
            relative((*bundle.gt_poses)[i], (*bundle.gt_poses)[j]).translation().norm();
        if (n > 1e-12) ref = n;
      }
    }
    if (ref == 0.0) {
      std::cerr << "--normalize-scale gt: ground truth has no nonzero baseline\n";
      return 1;
    }
    state = normalize_scale(state, ref);
  }

  SceneGt gt;
  std::vector<IterationStats> history;
  if (has_gt) gt = bundle_gt(bundle);
  state = refine(std::move(state), config, has_gt ? &gt : nullptr,
                 has_gt ? &history : nullptr, has_gt ? &std::cout : nullptr);

  fs::create_directories(out_dir);
  save_results(state, out_dir);
  if (has_gt) {
    const PairMetrics m = summarize(state.depths, state.poses, gt);
    std::ofstream f(fs::path(out_dir) / "metrics.txt");
    f << format_metric_table(m.depth, m.has_pose ? &m.pose : nullptr);
    f << format_metric_kv(m.depth, m.has_pose ? &m.pose : nullptr);
    std::ofstream itf(fs::path(out_dir) / "iterations.txt");
    for (const IterationStats& s : history) {
      itf << "iter " << s.iteration << " abs_rel=" << fmt_double(s.abs_rel)
          << " l1_inv=" << fmt_double(s.l1_inv) << " rot_deg=" << fmt_double(s.rot_deg)
          << " trans_deg=" << fmt_double(s.trans_deg) << "\n";
    }
  }
  if (!dump_dcv.empty()) {
    // Aggregated volume of frame 0 against the final state, for inspection.
    std::vector<SourceView> sources;
    for (int j = 1; j < state.frame_count(); ++j) {
      sources.push_back({&state.features[j], &state.depths[j], state.poses[j]});
    }
    VolumeParams vp;
    vp.w_geo = config.w_geo;
    vp.smooth_l = config.smooth_l;
    vp.smooth_x = config.smooth_x;
    vp.smooth_y = config.smooth_y;
    vp.depth_sampling = config.depth_sampling;
    const double d_min = config.d_min > 0.0 ? config.d_min : 0.8 * [&] {
      float best = 0.0f;
      for (const DepthMap& d : state.depths) {
        const float m = d.min_valid();
        if (m > 0.0f && (best == 0.0f || m < best)) best = m;
      }
      return static_cast<double>(best);
    }();
    const PlaneSet planes = sample_planes(d_min, config.planes);
    const CostVolume vol = compute_depth_cost(state.features[0], sources, state.poses[0],
                                              state.intrinsics.quarter(), planes, vp);
    dump_cost_volume(vol, dump_dcv);
  }
  std::cout << "wrote results to " << out_dir << "\n";
  return 0;
}

int run_eval(const std::string& bundle_dir, const std::string& pred_dir) {
  const Bundle bundle = load_bundle(bundle_dir);
  if (!bundle.gt_poses.has_value() || !bundle.gt_depths.has_value()) {
    std::cerr << "eval: bundle has no ground truth\n";
    return 1;
  }
  std::vector<Pose> poses = bundle.init_poses;
  std::vector<DepthMap> depths = bundle.init_depths;
  if (!pred_dir.empty()) {
    load_results(pred_dir, poses, depths);
    if (poses.size() != bundle.images.size()) {
      std::cerr << "eval: prediction frame count differs from bundle\n";
      return 1;
    }
  }
  const PairMetrics m = summarize(depths, poses, bundle_gt(bundle));
  std::cout << format_metric_table(m.depth, m.has_pose ? &m.pose : nullptr);
  std::cout << format_metric_kv(m.depth, m.has_pose ? &m.pose : nullptr);
  return 0;
}

int run_render_ply(const std::string& bundle_dir, const std::string& pred_dir,
                   const std::string& out_file) {
  const Bundle bundle = load_bundle(bundle_dir);
  std::vector<Pose> poses = bundle.init_poses;
  std::vector<DepthMap> depths = bundle.init_depths;
  if (!pred_dir.empty()) load_results(pred_dir, poses, depths);
  std::vector<Eigen::Vector3d> points;
  std::vector<std::array<uint8_t, 3>> colors;
  const CameraIntrinsics kf = bundle.intrinsics.quarter();
  for (size_t i = 0; i < poses.size(); ++i) {
    depth_to_points(depths[i], kf, poses[i], &bundle.images[i], points, colors);
  }
  write_ply(out_file, points, colors);
  std::cout << "wrote " << points.size() << " points to " << out_file << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view depth and pose refinement via plane-sweep cost volumes"};
  app.require_subcommand(1);

  // refine
  auto* refine_cmd = app.add_subcommand("refine", "Refine a bundle's depths and poses");
  std::string bundle_dir, out_dir, normalize = "none", depth_warp = "nn", dump_dcv;
  RefineConfig config;
  uint64_t seed = 0;
  refine_cmd->add_option("--bundle", bundle_dir, "Bundle directory")->required();
  refine_cmd->add_option("--out", out_dir, "Output directory")->required();
  refine_cmd->add_option("--iterations", config.iterations, "Refinement iterations");
  refine_cmd->add_option("--planes", config.planes, "Depth hypothesis count L");
  refine_cmd->add_option("--d-min", config.d_min, "Nearest plane depth (<=0: auto)");
  refine_cmd->add_option("--pose-rot-bin", config.rot_bin, "Rotation bin (radians)");
  refine_cmd->add_option("--pose-trans-bin", config.trans_bin_scale,
                         "Translation bin (fraction of baseline)");
  refine_cmd->add_option("--pose-grid", config.pose_grid, "Pose grid size per axis (odd)");
  refine_cmd->add_option("--beta-depth", config.beta_depth, "Depth soft-argmax sharpness");
  refine_cmd->add_option("--beta-pose", config.beta_pose, "Pose soft-argmax sharpness");
  refine_cmd->add_option("--w-geo", config.w_geo, "Geometric consistency weight");
  refine_cmd->add_option("--depth-warp", depth_warp, "Depth warp sampling: nn | bilinear")
      ->check(CLI::IsMember({"nn", "bilinear"}));
  refine_cmd->add_flag("--pose-then-depth", config.pose_then_depth,
                       "Update pose before depth inside an iteration");
  refine_cmd->add_flag("--edge-aware", config.edge_aware,
                       "Extra edge-aware cost smoothing pass");
  refine_cmd->add_option("--normalize-scale", normalize, "none | unit | gt")
      ->check(CLI::IsMember({"none", "unit", "gt"}));
  refine_cmd->add_option("--dump-dcv", dump_dcv, "Dump frame 0 aggregated D-CV to file");
  refine_cmd->add_option("--seed", seed, "Unused; runs are deterministic");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic bundle");
  std::string synth_out, scene = "plane", spec_file;
  int frames = 2, width = 256, height = 192;
  double baseline = 0.25, rot_noise = 0.0, trans_noise = 0.0, depth_noise = 0.0;
  uint64_t synth_seed = 0;
  synth_cmd->add_option("--out", synth_out, "Output bundle directory")->required();
  synth_cmd->add_option("--scene", scene, "Preset: plane | box | spheres | patch | random");
  synth_cmd->add_option("--spec", spec_file, "Scene spec file (overrides --scene)");
  synth_cmd->add_option("--seed", synth_seed, "Random seed");
  synth_cmd->add_option("--frames", frames, "Camera count")->check(CLI::Range(2, 64));
  synth_cmd->add_option("--width", width, "Image width (divisible by 4)");
  synth_cmd->add_option("--height", height, "Image height (divisible by 4)");
  synth_cmd->add_option("--baseline", baseline, "Camera baseline (meters)");
  synth_cmd->add_option("--rot-noise", rot_noise, "Init rotation noise per axis (radians)");
  synth_cmd->add_option("--trans-noise", trans_noise, "Init translation noise per axis (m)");
  synth_cmd->add_option("--depth-noise", depth_noise, "Init multiplicative depth noise");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Compare predictions against ground truth");
  std::string eval_bundle, eval_pred;
  eval_cmd->add_option("--bundle", eval_bundle, "Bundle with ground truth")->required();
  eval_cmd->add_option("--pred", eval_pred, "Results directory (default: bundle init)");

  // render-ply
  auto* ply_cmd = app.add_subcommand("render-ply", "Export depth maps as a point cloud");
  std::string ply_bundle, ply_pred, ply_out;
  ply_cmd->add_option("--bundle", ply_bundle, "Bundle directory")->required();
  ply_cmd->add_option("--pred", ply_pred, "Results directory (default: bundle init)");
  ply_cmd->add_option("--out", ply_out, "Output .ply path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (refine_cmd->parsed()) {
      config.depth_sampling =
          depth_warp == "nn" ? DepthSampling::kNearest : DepthSampling::kBilinear;
      return run_refine(bundle_dir, out_dir, config, normalize, dump_dcv);
    }
    if (synth_cmd->parsed()) {
      return run_synth(synth_out, scene, spec_file, synth_seed, frames, width, height,
                       baseline, rot_noise, trans_noise, depth_noise);
    }
    if (eval_cmd->parsed()) {
      return run_eval(eval_bundle, eval_pred);
    }
    if (ply_cmd->parsed()) {
      return run_render_ply(ply_bundle, ply_pred, ply_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

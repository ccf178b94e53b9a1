#include "sweepsfm/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace sweepsfm {

namespace {

double huber(double r, double threshold) {
  const double a = std::abs(r);
  return a <= threshold ? 0.5 * r * r : threshold * (a - 0.5 * threshold);
}

void append_kv(std::string& out, const char* key, double value) {
  char line[96];
  std::snprintf(line, sizeof(line), "%s=%.9g\n", key, value);
  out += line;
}

}  // namespace

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw std::invalid_argument("depth_metrics: resolution mismatch");
  }
  long n = 0;
  double s_inv = 0.0, s_rel = 0.0, s_abs = 0.0, s_sq_rel = 0.0, s_sq = 0.0;
  double s_log = 0.0, s_log_sq = 0.0;
  long n_d1 = 0, n_d2 = 0, n_d3 = 0;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!pred.valid_at(x, y) || !gt.valid_at(x, y)) continue;
      const double p = pred.at(x, y);
      const double g = gt.at(x, y);
      ++n;
      s_inv += std::abs(1.0 / p - 1.0 / g);
      s_rel += std::abs(p - g) / g;
      s_abs += std::abs(p - g);
      s_sq_rel += (p - g) * (p - g) / g;
      s_sq += (p - g) * (p - g);
      const double z = std::log(p) - std::log(g);
      s_log += z;
      s_log_sq += z * z;
      const double ratio = std::max(p / g, g / p);
      if (ratio < 1.25) ++n_d1;
      if (ratio < 1.25 * 1.25) ++n_d2;
      if (ratio < 1.25 * 1.25 * 1.25) ++n_d3;
    }
  }
  if (n == 0) {
    throw std::invalid_argument("depth_metrics: no jointly valid pixels");
  }
  DepthMetrics m;
  m.l1_inv = s_inv / n;
  m.l1_rel = s_rel / n;
  m.abs_rel = s_rel / n;
  m.abs_diff = s_abs / n;
  m.sq_rel = s_sq_rel / n;
  m.rms = std::sqrt(s_sq / n);
  m.log_rms = std::sqrt(s_log_sq / n);
  const double mean_z = s_log / n;
  m.sc_inv = std::sqrt(std::max(0.0, s_log_sq / n - mean_z * mean_z));
  m.delta1 = 100.0 * n_d1 / n;
  m.delta2 = 100.0 * n_d2 / n;
  m.delta3 = 100.0 * n_d3 / n;
  return m;
}

PoseMetrics pose_metrics(const Pose& pred, const Pose& gt) {
  PoseMetrics m;
  m.rot_deg = rotation_angle(pred.rotation() * gt.rotation().transpose()) * 180.0 / M_PI;
  const double gn = gt.translation().norm();
  if (!(gn > 0.0)) {
    throw std::invalid_argument("pose_metrics: ground-truth translation is zero");
  }
  const double pn = pred.translation().norm();
  if (!(pn > 0.0)) {
    m.trans_deg = 90.0;  // no direction to compare
    return m;
  }
  const double c = pred.translation().dot(gt.translation()) / (pn * gn);
  m.trans_deg = std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / M_PI;
  return m;
}

LossBreakdown losses(const DepthMap& pred_coarse, const DepthMap& pred_refined,
                     const DepthMap& gt_depth, const Pose& pred_pose, const Pose& gt_pose,
                     const LossWeights& weights) {
  constexpr double kHuberThreshold = 1.0;
  auto depth_term = [&](const DepthMap& pred) {
    if (pred.width() != gt_depth.width() || pred.height() != gt_depth.height()) {
      throw std::invalid_argument("losses: resolution mismatch");
    }
    double sum = 0.0;
    long n = 0;
    for (int y = 0; y < gt_depth.height(); ++y) {
      for (int x = 0; x < gt_depth.width(); ++x) {
        if (!pred.valid_at(x, y) || !gt_depth.valid_at(x, y)) continue;
        sum += huber(1.0 / pred.at(x, y) - 1.0 / gt_depth.at(x, y), kHuberThreshold);
        ++n;
      }
    }
    if (n == 0) {
      throw std::invalid_argument("losses: no jointly valid pixels");
    }
    return sum / n;
  };

  LossBreakdown out;
  out.depth = weights.lambda_coarse * depth_term(pred_coarse) + depth_term(pred_refined);
  const Eigen::Vector3d de =
      rotation_to_euler_zyx(pred_pose.rotation()) - rotation_to_euler_zyx(gt_pose.rotation());
  out.rotation = de.cwiseAbs().mean();
  out.translation = (pred_pose.translation() - gt_pose.translation()).cwiseAbs().mean();
  out.final = weights.lambda_r * out.rotation + weights.lambda_t * out.translation +
              weights.lambda_d * out.depth;
  return out;
}

std::string format_metric_table(const DepthMetrics& d, const PoseMetrics* p) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %-10s %-10s %-10s %-10s %-10s\n", "L1-inv",
                "sc-inv", "L1-rel", "abs_rel", "abs_diff", "sq_rel");
  os << buf;
  std::snprintf(buf, sizeof(buf), "%-10.4f %-10.4f %-10.4f %-10.4f %-10.4f %-10.4f\n",
                d.l1_inv, d.sc_inv, d.l1_rel, d.abs_rel, d.abs_diff, d.sq_rel);
  os << buf;
  std::snprintf(buf, sizeof(buf), "%-10s %-10s %-10s %-10s %-10s\n", "rms", "log_rms",
                "d<1.25", "d<1.25^2", "d<1.25^3");
  os << buf;
  std::snprintf(buf, sizeof(buf), "%-10.4f %-10.4f %-10.2f %-10.2f %-10.2f\n", d.rms,
                d.log_rms, d.delta1, d.delta2, d.delta3);
  os << buf;
  if (p != nullptr) {
    std::snprintf(buf, sizeof(buf), "%-10s %-10s\n%-10.4f %-10.4f\n", "rot(deg)",
                  "trans(deg)", p->rot_deg, p->trans_deg);
    os << buf;
  }
  return os.str();
}

std::string format_metric_kv(const DepthMetrics& d, const PoseMetrics* p) {
  std::string out;
  append_kv(out, "l1_inv", d.l1_inv);
  append_kv(out, "sc_inv", d.sc_inv);
  append_kv(out, "l1_rel", d.l1_rel);
  append_kv(out, "abs_rel", d.abs_rel);
  append_kv(out, "abs_diff", d.abs_diff);
  append_kv(out, "sq_rel", d.sq_rel);
  append_kv(out, "rms", d.rms);
  append_kv(out, "log_rms", d.log_rms);
  append_kv(out, "delta1", d.delta1);
  append_kv(out, "delta2", d.delta2);
  append_kv(out, "delta3", d.delta3);
  if (p != nullptr) {
    append_kv(out, "rot_deg", p->rot_deg);
    append_kv(out, "trans_deg", p->trans_deg);
  }
  return out;
}

}  // namespace sweepsfm

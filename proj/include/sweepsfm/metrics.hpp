#pragma once

#include <string>

#include "sweepsfm/geometry.hpp"
#include "sweepsfm/image.hpp"

namespace sweepsfm {

/// Depth-error summary over jointly valid pixels. delta1..3 are accuracy
/// percentages at thresholds 1.25^t.
struct DepthMetrics {
  double l1_inv = 0.0;   // mean |1/pred - 1/gt|
  double sc_inv = 0.0;   // stddev of log(pred) - log(gt)
  double l1_rel = 0.0;   // mean |pred - gt| / gt
  double abs_rel = 0.0;
  double abs_diff = 0.0;
  double sq_rel = 0.0;
  double rms = 0.0;
  double log_rms = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
};

/// Angular pose errors in degrees.
struct PoseMetrics {
  double rot_deg = 0.0;
  double trans_deg = 0.0;  // angle between translation directions
};

struct LossWeights {
  double lambda_coarse = 0.7;
  double lambda_r = 0.8;
  double lambda_t = 0.1;
  double lambda_d = 0.1;
};

struct LossBreakdown {
  double depth = 0.0;
  double rotation = 0.0;
  double translation = 0.0;
  double final = 0.0;
};

/// Throws when pred and gt share no valid pixel.
DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt);

/// rot_deg is the angle of pred.R * gt.R^T; trans_deg compares translation
/// directions and is scale-free. Throws when the ground-truth translation is
/// zero.
PoseMetrics pose_metrics(const Pose& pred, const Pose& gt);

/// Depth term: Huber (threshold 1) on inverse-depth residuals, coarse map
/// weighted by lambda_coarse. Rotation/translation terms: mean L1 in
/// Euler-angle / translation-vector space. final combines them with the
/// lambda_r / lambda_t / lambda_d weights.
LossBreakdown losses(const DepthMap& pred_coarse, const DepthMap& pred_refined,
                     const DepthMap& gt_depth, const Pose& pred_pose, const Pose& gt_pose,
                     const LossWeights& weights = {});

/// Flat aligned table of every metric field.
std::string format_metric_table(const DepthMetrics& depth, const PoseMetrics* pose);

/// Machine-readable "key=value" lines, one metric per line.
std::string format_metric_kv(const DepthMetrics& depth, const PoseMetrics* pose);

}  // namespace sweepsfm

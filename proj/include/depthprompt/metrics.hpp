#pragma once

#include <limits>
#include <string>

#include "depthprompt/raster.hpp"

namespace dp {

struct MetricReport {
  double rmse = 0.0;    // meters
  double mae = 0.0;     // meters
  double delta1 = 0.0;  // fraction of pixels with max(pred/gt, gt/pred) < 1.25
  long n_valid = 0;     // evaluated pixel count

  std::string to_json() const;
  static MetricReport from_json(const std::string& text);
};

// Evaluates pred against gt over the pixels where gt is valid and lies inside
// [min_eval_depth, max_eval_depth]. All accumulation is done in double.
// Throws EmptyEvaluationError when no pixel qualifies.
MetricReport compute_metrics(
    const DepthMap& pred, const DepthMap& gt, double min_eval_depth = 1e-3,
    double max_eval_depth = std::numeric_limits<double>::infinity());

// Pixel-pooled accumulator so multi-scene evaluations aggregate exactly like
// a single concatenated raster.
struct MetricAccumulator {
  double sum_sq = 0.0;
  double sum_abs = 0.0;
  long n_inlier = 0;
  long n = 0;

  void add(const DepthMap& pred, const DepthMap& gt, double min_eval_depth,
           double max_eval_depth);
  MetricReport report() const;  // throws EmptyEvaluationError when n == 0
};

}  // namespace dp

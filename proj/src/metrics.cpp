#include "depthprompt/metrics.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace dp {

void MetricAccumulator::add(const DepthMap& pred, const DepthMap& gt,
                            double min_eval_depth, double max_eval_depth) {
  require_same_shape(pred, gt, "compute_metrics");

  Raster<double> g = gt.cast<double>();
  Raster<double> p = pred.cast<double>();
  auto mask = (g > 0.0 && g >= min_eval_depth && g <= max_eval_depth).eval();

  Raster<double> md = mask.cast<double>();
  Raster<double> err = (p - g) * md;
  sum_sq += (err * err).sum();
  sum_abs += err.abs().sum();

  // Guard masked-out pixels so the ratio never divides 0/0.
  Raster<double> gs = mask.select(g, 1.0);
  Raster<double> ps = mask.select(p, 1.0);
  Raster<double> ratio = (ps / gs).max(gs / ps);
  n_inlier += (mask && ratio < 1.25).count();
  n += mask.count();
}

MetricReport MetricAccumulator::report() const {
  if (n == 0)
    throw EmptyEvaluationError("compute_metrics: no ground-truth pixel inside the evaluation window");
  MetricReport r;
  r.rmse = std::sqrt(sum_sq / static_cast<double>(n));
  r.mae = sum_abs / static_cast<double>(n);
  r.delta1 = static_cast<double>(n_inlier) / static_cast<double>(n);
  r.n_valid = n;
  return r;
}

MetricReport compute_metrics(const DepthMap& pred, const DepthMap& gt,
                             double min_eval_depth, double max_eval_depth) {
  MetricAccumulator acc;
  acc.add(pred, gt, min_eval_depth, max_eval_depth);
  return acc.report();
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["rmse"] = rmse;
  j["mae"] = mae;
  j["delta1"] = delta1;
  j["n_valid"] = n_valid;
  return j.dump();
}

MetricReport MetricReport::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  MetricReport r;
  r.rmse = j.at("rmse").get<double>();
  r.mae = j.at("mae").get<double>();
  r.delta1 = j.at("delta1").get<double>();
  r.n_valid = j.at("n_valid").get<long>();
  return r;
}

}  // namespace dp

#pragma once

#include "depthprompt/raster.hpp"

namespace dp {

struct LossConfig {
  double lambda_si = 0.85;
  double mu = 0.1;
};

// Scalar loss value plus its analytic gradient with respect to pred.
// Everything is evaluated in double so gradients check against central
// finite differences to < 1e-4 relative error.
struct LossResult {
  double value = 0.0;
  Raster<double> grad;
};

// Scale-invariant log loss over gt-valid pixels:
//   L = mean(delta^2) - lambda * mean(delta)^2,  delta = log pred - log gt.
// Throws DomainError if pred <= 0 at a valid pixel, EmptyEvaluationError if
// gt has no valid pixel.
LossResult loss_si(const Raster<double>& pred, const Raster<double>& gt,
                   double lambda_si);

// Combined distance over gt-valid pixels: mean(|e| + e^2), e = pred - gt.
LossResult loss_comb(const Raster<double>& pred, const Raster<double>& gt);

// loss_comb(final, gt) + mu * loss_si(initial_metric, gt).
double loss_total(const Raster<double>& final, const Raster<double>& initial_metric,
                  const Raster<double>& gt, const LossConfig& cfg);

inline LossResult loss_si(const DepthMap& pred, const DepthMap& gt,
                          double lambda_si) {
  return loss_si(pred.cast<double>().eval(), gt.cast<double>().eval(), lambda_si);
}
inline LossResult loss_comb(const DepthMap& pred, const DepthMap& gt) {
  return loss_comb(pred.cast<double>().eval(), gt.cast<double>().eval());
}
inline double loss_total(const DepthMap& final, const DepthMap& initial_metric,
                         const DepthMap& gt, const LossConfig& cfg) {
  return loss_total(final.cast<double>().eval(), initial_metric.cast<double>().eval(),
                    gt.cast<double>().eval(), cfg);
}

}  // namespace dp

#include "depthprompt/losses.hpp"

#include <cmath>

namespace dp {

LossResult loss_si(const Raster<double>& pred, const Raster<double>& gt,
                   double lambda_si) {
  require_same_shape(pred, gt, "loss_si");

  double sum_d = 0.0, sum_d2 = 0.0;
  long n = 0;
  for (Eigen::Index c = 0; c < gt.cols(); ++c)
    for (Eigen::Index r = 0; r < gt.rows(); ++r)
      if (gt(r, c) > 0.0) {
        if (!(pred(r, c) > 0.0))
          throw DomainError("loss_si: non-positive prediction at a valid pixel");
        double d = std::log(pred(r, c)) - std::log(gt(r, c));
        sum_d += d;
        sum_d2 += d * d;
        ++n;
      }
  if (n == 0) throw EmptyEvaluationError("loss_si: gt has no valid pixel");

  const double nn = static_cast<double>(n);
  LossResult out;
  out.value = sum_d2 / nn - lambda_si * (sum_d / nn) * (sum_d / nn);
  out.grad = Raster<double>::Zero(gt.rows(), gt.cols());
  for (Eigen::Index c = 0; c < gt.cols(); ++c)
    for (Eigen::Index r = 0; r < gt.rows(); ++r)
      if (gt(r, c) > 0.0) {
        double d = std::log(pred(r, c)) - std::log(gt(r, c));
        out.grad(r, c) =
            (2.0 * d / nn - 2.0 * lambda_si * sum_d / (nn * nn)) / pred(r, c);
      }
  return out;
}

LossResult loss_comb(const Raster<double>& pred, const Raster<double>& gt) {
  require_same_shape(pred, gt, "loss_comb");

  long n = (gt > 0.0).count();
  if (n == 0) throw EmptyEvaluationError("loss_comb: gt has no valid pixel");
  const double nn = static_cast<double>(n);

  LossResult out;
  out.value = 0.0;
  out.grad = Raster<double>::Zero(gt.rows(), gt.cols());
  for (Eigen::Index c = 0; c < gt.cols(); ++c)
    for (Eigen::Index r = 0; r < gt.rows(); ++r)
      if (gt(r, c) > 0.0) {
        double e = pred(r, c) - gt(r, c);
        out.value += std::abs(e) + e * e;
        double sgn = e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0);
        out.grad(r, c) = (sgn + 2.0 * e) / nn;
      }
  out.value /= nn;
  return out;
}

double loss_total(const Raster<double>& final, const Raster<double>& initial_metric,
                  const Raster<double>& gt, const LossConfig& cfg) {
  double combined = loss_comb(final, gt).value;
  double si = cfg.mu != 0.0 ? loss_si(initial_metric, gt, cfg.lambda_si).value
                            : 0.0;
  return combined + cfg.mu * si;
}

}  // namespace dp

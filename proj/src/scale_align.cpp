#include "depthprompt/scale_align.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace dp {

ScaleFit fit_scale(const DepthMap& relative, const SparseDepth& sparse) {
  require_same_shape(relative, sparse, "fit_scale");

  double num = 0.0, den = 0.0;
  long n = 0;
  for (Eigen::Index c = 0; c < sparse.cols(); ++c)
    for (Eigen::Index r = 0; r < sparse.rows(); ++r)
      if (sparse(r, c) > 0.0f) {
        double d = relative(r, c), s = sparse(r, c);
        num += d * s;
        den += d * d;
        ++n;
      }
  if (n == 0) throw NoSupportError("fit_scale: sparse raster has no valid pixel");
  if (den == 0.0)
    throw DegenerateSupportError("fit_scale: relative depth is zero on the whole support");

  ScaleFit fit;
  fit.p_hat = num / den;
  fit.n_support = n;

  double res = 0.0;
  for (Eigen::Index c = 0; c < sparse.cols(); ++c)
    for (Eigen::Index r = 0; r < sparse.rows(); ++r)
      if (sparse(r, c) > 0.0f) {
        double e = fit.p_hat * relative(r, c) - sparse(r, c);
        res += e * e;
      }
  fit.residual_norm = std::sqrt(res);
  return fit;
}

DepthMap apply_scale(const DepthMap& relative, const ScaleFit& fit) {
  return relative * static_cast<float>(fit.p_hat);
}

std::string ScaleFit::to_json() const {
  nlohmann::json j;
  j["p_hat"] = p_hat;
  j["n_support"] = n_support;
  j["residual_norm"] = residual_norm;
  return j.dump();
}

}  // namespace dp

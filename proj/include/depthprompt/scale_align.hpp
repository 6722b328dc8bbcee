#pragma once

#include <string>

#include "depthprompt/raster.hpp"

namespace dp {

// Closed-form solution of min_p || p * relative - sparse || over the sparse
// support. One scalar, so the normal equation solves it exactly.
struct ScaleFit {
  double p_hat = 1.0;
  long n_support = 0;
  double residual_norm = 0.0;  // || p_hat * d - s ||_2 over the support

  std::string to_json() const;
};

// Support is the sparse raster's valid set. Throws NoSupportError when it is
// empty and DegenerateSupportError when the relative values on it are all
// zero; callers that need a total function fall back to p_hat = 1.
ScaleFit fit_scale(const DepthMap& relative, const SparseDepth& sparse);

// Multiplies every pixel by fit.p_hat. Validity (zero stays zero) preserved.
DepthMap apply_scale(const DepthMap& relative, const ScaleFit& fit);

}  // namespace dp

#include "depthprompt/propagation.hpp"

#include <cmath>

#include "depthprompt/raster_io.hpp"

namespace dp {
namespace {

void check_affinity(const AffinityField& a, const char* what) {
  if (a.stencil < 3 || a.stencil % 2 == 0)
    throw ContractError(std::string(what) + ": stencil must be odd and >= 3");
  if (static_cast<int>(a.weights.size()) != a.stencil * a.stencil)
    throw ContractError(std::string(what) + ": weight plane count != stencil^2");
  for (const auto& w : a.weights)
    require_same_shape(w, a.weights[0], what);
}

}  // namespace

AffinityField normalize_affinity(const AffinityField& raw) {
  check_affinity(raw, "normalize_affinity");
  for (const auto& w : raw.weights)
    if (!w.isFinite().all())
      throw DataError("normalize_affinity: non-finite weight");

  const int planes = raw.stencil * raw.stencil;
  const int center = raw.center_index();
  AffinityField out(raw.stencil, raw.height(), raw.width());
  for (int r = 0; r < raw.height(); ++r)
    for (int c = 0; c < raw.width(); ++c) {
      double sum = 0.0;
      for (int k = 0; k < planes; ++k)
        sum += std::abs(static_cast<double>(raw.weights[k](r, c)));
      if (sum == 0.0) {
        out.weights[center](r, c) = 1.0f;
      } else {
        for (int k = 0; k < planes; ++k)
          out.weights[k](r, c) = static_cast<float>(
              std::abs(static_cast<double>(raw.weights[k](r, c))) / sum);
      }
    }
  return out;
}

DepthMap propagate(const DepthMap& initial, const SparseDepth& seeds,
                   const AffinityField& affinity, const PropagationConfig& cfg) {
  check_affinity(affinity, "propagate");
  require_same_shape(initial, affinity.weights[0], "propagate");
  if (seeds.size() > 0) require_same_shape(initial, seeds, "propagate");
  if (cfg.n_steps < 0) throw ContractError("propagate: negative step count");
  return propagate_kernel<float>(initial, seeds, affinity.weights,
                                 affinity.stencil, cfg.n_steps,
                                 cfg.seed_reinjection);
}

DepthMap propagate_reference(const DepthMap& initial, const SparseDepth& seeds,
                             const AffinityField& affinity,
                             const PropagationConfig& cfg) {
  check_affinity(affinity, "propagate_reference");
  require_same_shape(initial, affinity.weights[0], "propagate_reference");
  if (seeds.size() > 0) require_same_shape(initial, seeds, "propagate_reference");

  const int height = static_cast<int>(initial.rows());
  const int width = static_cast<int>(initial.cols());
  const int stencil = affinity.stencil;
  const int radius = affinity.radius();
  const int center = affinity.center_index();
  const bool have_seeds = seeds.size() > 0;

  DepthMap cur = initial;
  for (int t = 0; t < cfg.n_steps; ++t) {
    DepthMap next(height, width);
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        float acc = affinity.weights[center](r, c) * initial(r, c);
        float hmin = initial(r, c), hmax = initial(r, c);
        for (int k = 0; k < stencil * stencil; ++k) {
          if (k == center) continue;
          int rr = std::clamp(r + k / stencil - radius, 0, height - 1);
          int cc = std::clamp(c + k % stencil - radius, 0, width - 1);
          float v = cur(rr, cc);
          acc += affinity.weights[k](r, c) * v;
          hmin = std::min(hmin, v);
          hmax = std::max(hmax, v);
        }
        acc = std::min(std::max(acc, hmin), hmax);
        if (cfg.seed_reinjection && have_seeds && seeds(r, c) > 0.0f)
          acc = seeds(r, c);
        next(r, c) = acc;
      }
    cur = std::move(next);
  }
  return cur;
}

AffinityField read_affinity(const std::filesystem::path& path) {
  auto planes = read_planes(path);
  int n = static_cast<int>(planes.size());
  int stencil = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (stencil * stencil != n || stencil < 3 || stencil % 2 == 0)
    throw FormatError("read_affinity: channel count " + std::to_string(n) +
                      " is not an odd stencil squared: " + path.string());
  AffinityField a;
  a.stencil = stencil;
  a.weights = std::move(planes);
  return a;
}

void write_affinity(const AffinityField& affinity,
                    const std::filesystem::path& path) {
  check_affinity(affinity, "write_affinity");
  write_planes(affinity.weights, path);
}

}  // namespace dp

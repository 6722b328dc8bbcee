#include "depthprompt/sensor_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "depthprompt/rng.hpp"

namespace dp {

SparseDepth sample_random(const DepthMap& gt, int n, std::uint64_t rng_seed) {
  if (n < 0) throw ContractError("sample_random: negative count");
  std::vector<int> valid;
  valid.reserve(gt.size());
  const int width = static_cast<int>(gt.cols());
  for (int r = 0; r < gt.rows(); ++r)
    for (int c = 0; c < width; ++c)
      if (gt(r, c) > 0.0f) valid.push_back(r * width + c);
  if (n > static_cast<int>(valid.size()))
    throw InsufficientSupportError(
        "sample_random: requested " + std::to_string(n) + " of " +
        std::to_string(valid.size()) + " valid pixels");

  Rng rng(rng_seed);
  for (int i = 0; i < n; ++i) {
    int j = i + rng.uniform_int(static_cast<int>(valid.size()) - i);
    std::swap(valid[i], valid[j]);
  }

  SparseDepth out = SparseDepth::Zero(gt.rows(), gt.cols());
  for (int i = 0; i < n; ++i) {
    int r = valid[i] / width, c = valid[i] % width;
    out(r, c) = gt(r, c);
  }
  return out;
}

SparseDepth sample_grid(const DepthMap& gt, int stride,
                        std::pair<int, int> phase) {
  if (stride < 1) throw ContractError("sample_grid: stride must be >= 1");
  if (phase.first < 0 || phase.first >= stride || phase.second < 0 ||
      phase.second >= stride)
    throw ContractError("sample_grid: phase out of [0, stride)");
  SparseDepth out = SparseDepth::Zero(gt.rows(), gt.cols());
  for (Eigen::Index r = phase.first; r < gt.rows(); r += stride)
    for (Eigen::Index c = phase.second; c < gt.cols(); c += stride)
      if (gt(r, c) > 0.0f) out(r, c) = gt(r, c);
  return out;
}

SparseDepth sample_lines(const DepthMap& gt, int n_lines, std::uint64_t rng_seed,
                         std::pair<double, double> band) {
  const int height = static_cast<int>(gt.rows());
  int band_begin = static_cast<int>(std::floor(band.first * height));
  int band_end = static_cast<int>(std::ceil(band.second * height));
  band_begin = std::clamp(band_begin, 0, height);
  band_end = std::clamp(band_end, band_begin, height);
  const int band_rows = band_end - band_begin;
  if (n_lines < 0) throw ContractError("sample_lines: negative line count");
  if (n_lines > band_rows)
    throw InsufficientSupportError("sample_lines: " + std::to_string(n_lines) +
                                   " lines exceed " + std::to_string(band_rows) +
                                   " band rows");

  SparseDepth out = SparseDepth::Zero(gt.rows(), gt.cols());
  if (n_lines == 0) return out;

  Rng rng(rng_seed);
  const double offset = rng.uniform();
  const double step = static_cast<double>(band_rows) / n_lines;
  for (int i = 0; i < n_lines; ++i) {
    int row = band_begin + static_cast<int>(std::floor((i + offset) * step));
    row = std::min(row, band_end - 1);
    for (Eigen::Index c = 0; c < gt.cols(); ++c)
      if (gt(row, c) > 0.0f) out(row, c) = gt(row, c);
  }
  return out;
}

DepthMap mask_range(const DepthMap& d, double min_m, double max_m) {
  if (!(min_m <= max_m)) throw ContractError("mask_range: unordered window");
  return (d.cast<double>() >= min_m && d.cast<double>() <= max_m)
      .select(d, DepthMap::Zero(d.rows(), d.cols()));
}

SparseDepth sample_for_spec(const DepthMap& gt, const BiasSpec& spec,
                            std::uint64_t rng_seed) {
  DepthMap pool =
      spec.range_bounded() ? mask_range(gt, spec.range_min, spec.range_max) : gt;
  switch (spec.pattern) {
    case SamplePattern::kRandom: {
      int n = std::min<int>(spec.sample_count,
                            static_cast<int>(valid_count(pool)));
      return sample_random(pool, n, rng_seed);
    }
    case SamplePattern::kGrid:
      return sample_grid(pool, spec.grid_stride, spec.grid_phase);
    case SamplePattern::kLine: {
      int band_rows = static_cast<int>(
          std::ceil(spec.line_band.second * gt.rows()) -
          std::floor(spec.line_band.first * gt.rows()));
      int n = std::min(spec.line_count, band_rows);
      return sample_lines(pool, n, rng_seed, spec.line_band);
    }
  }
  throw ContractError("sample_for_spec: unknown pattern");
}

SparseDepth rda_sample(const DepthMap& gt, const std::vector<BiasSpec>& family,
                       std::uint64_t rng_seed) {
  if (family.empty()) throw ContractError("rda_sample: empty spec family");
  Rng rng(derive_seed(rng_seed, 0));
  BiasSpec spec = family[rng.uniform_int(static_cast<int>(family.size()))];
  if (spec.pattern == SamplePattern::kRandom) {
    int lo = std::max(spec.count_min, 1);
    spec.sample_count = rng.log_uniform_int(lo, std::max(lo, spec.sample_count));
  }
  return sample_for_spec(gt, spec, derive_seed(rng_seed, 1));
}

std::pair<Image, DepthMap> generate_scene(const SceneSpec& spec) {
  if (spec.height < 1 || spec.width < 1)
    throw ContractError("generate_scene: empty raster");
  if (spec.n_planes < 1)
    throw ContractError("generate_scene: need at least one plane");
  if (!(spec.min_depth > 0.0) || !(spec.min_depth < spec.max_depth))
    throw ContractError("generate_scene: bad depth range");

  Rng rng(spec.rng_seed);
  const int n = spec.n_planes;

  // Voronoi sites give convex cells; each cell carries a slanted plane and
  // an albedo color.
  std::vector<double> site_r(n), site_c(n), z0(n), slope_r(n), slope_c(n);
  std::vector<std::array<double, 3>> albedo(n);
  for (int i = 0; i < n; ++i) {
    site_r[i] = rng.uniform(0.0, spec.height);
    site_c[i] = rng.uniform(0.0, spec.width);
    z0[i] = rng.uniform(spec.min_depth, spec.max_depth);
    slope_r[i] = rng.uniform(-spec.max_slope, spec.max_slope);
    slope_c[i] = rng.uniform(-spec.max_slope, spec.max_slope);
    // Narrow albedo magnitudes keep shading primarily a depth cue; the
    // per-channel spread still separates the cells.
    for (int ch = 0; ch < 3; ++ch) albedo[i][ch] = rng.uniform(0.42, 0.68);
  }

  DepthMap depth(spec.height, spec.width);
  Image image(3, spec.height, spec.width);
  const double span = spec.max_depth - spec.min_depth;
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      int cell = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        double dr = r - site_r[i], dc = c - site_c[i];
        double d2 = dr * dr + dc * dc;
        if (d2 < best) {
          best = d2;
          cell = i;
        }
      }
      double z = z0[cell] + slope_r[cell] * (r - site_r[cell]) +
                 slope_c[cell] * (c - site_c[cell]);
      z = std::clamp(z, spec.min_depth, spec.max_depth);
      depth(r, c) = static_cast<float>(z);

      // Nearer surfaces render brighter; albedo separates the cells.
      double shade = 0.3 + 0.6 * (1.0 - (z - spec.min_depth) / span);
      double noise = rng.uniform(-spec.noise_amp, spec.noise_amp);
      for (int ch = 0; ch < 3; ++ch) {
        double v = albedo[cell][ch] * shade + noise;
        image.planes[ch](r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return {std::move(image), std::move(depth)};
}

}  // namespace dp

#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "depthprompt/raster.hpp"

namespace dp {

enum class SamplePattern { kRandom, kGrid, kLine };

// Declarative description of one sensor condition: how many measurements,
// in what spatial layout, and within which metric range window.
struct BiasSpec {
  SamplePattern pattern = SamplePattern::kRandom;
  int sample_count = 500;  // random pattern
  int count_min = 0;       // RDA draw floor; 0 means "default to 1"
  int grid_stride = 2;     // grid pattern
  std::pair<int, int> grid_phase = {0, 0};
  int line_count = 4;      // line pattern
  // Rows eligible for line sampling, as fractions of image height.
  std::pair<double, double> line_band = {0.5, 1.0};
  double range_min = 0.0;
  double range_max = std::numeric_limits<double>::infinity();
  std::uint64_t rng_seed = 0;

  bool range_bounded() const {
    return range_min > 0.0 || std::isfinite(range_max);
  }
};

struct SceneSpec {
  int height = 48;
  int width = 64;
  int n_planes = 8;
  double min_depth = 0.5;
  double max_depth = 10.0;
  double max_slope = 0.12;   // meters of depth per pixel
  double noise_amp = 0.015;  // image shading noise amplitude
  std::uint64_t rng_seed = 0;
};

// Retains exactly n distinct valid pixels of gt, values copied verbatim.
SparseDepth sample_random(const DepthMap& gt, int n, std::uint64_t rng_seed);

// Retains valid pixels whose row and column are congruent to phase mod stride.
SparseDepth sample_grid(const DepthMap& gt, int stride,
                        std::pair<int, int> phase = {0, 0});

// Retains valid pixels on n_lines distinct rows, evenly spaced over the given
// band (defaults to the lower half of the image); the seed drives the
// sub-line placement offset.
SparseDepth sample_lines(const DepthMap& gt, int n_lines, std::uint64_t rng_seed,
                         std::pair<double, double> band = {0.5, 1.0});

// Keeps pixels with value inside [min_m, max_m], zeroes the rest.
DepthMap mask_range(const DepthMap& d, double min_m, double max_m);

// Applies spec.range_window, then the spec's pattern sampler. Counts are
// clamped to the available valid support.
SparseDepth sample_for_spec(const DepthMap& gt, const BiasSpec& spec,
                            std::uint64_t rng_seed);

// Random depth augmentation: draws one spec from the family, randomizing the
// sample count of random-pattern specs log-uniformly over
// [max(count_min,1), sample_count].
SparseDepth rda_sample(const DepthMap& gt, const std::vector<BiasSpec>& family,
                       std::uint64_t rng_seed);

// Piecewise-planar synthetic scene. Depth is fully valid; image intensity is
// an affine function of depth and per-cell albedo plus low-amplitude noise,
// so image edges align with depth discontinuities.
std::pair<Image, DepthMap> generate_scene(const SceneSpec& spec);

}  // namespace dp

#pragma once

#include <algorithm>
#include <filesystem>
#include <vector>

#include "depthprompt/raster.hpp"

namespace dp {

// Per-pixel stencil weights over a (2r+1)^2 window. Plane k holds the weight
// of offset (dr, dc) with k = (dr + r) * stencil + (dc + r); the center plane
// is the anchor weight applied to the initial depth.
struct AffinityField {
  int stencil = 7;
  std::vector<Raster<float>> weights;

  AffinityField() = default;
  AffinityField(int stencil_size, int height, int width)
      : stencil(stencil_size),
        weights(stencil_size * stencil_size,
                Raster<float>::Zero(height, width)) {}

  int height() const { return weights.empty() ? 0 : static_cast<int>(weights[0].rows()); }
  int width() const { return weights.empty() ? 0 : static_cast<int>(weights[0].cols()); }
  int radius() const { return (stencil - 1) / 2; }
  int center_index() const { return (stencil * stencil - 1) / 2; }
  std::pair<int, int> offset(int k) const {
    return {k / stencil - radius(), k % stencil - radius()};
  }
};

struct PropagationConfig {
  int n_steps = 6;
  bool seed_reinjection = true;
  // Boundary handling is clamp (replicate edge pixel).
};

// Per pixel: w <- |w| / sum|w| (double accumulation); all-zero pixels get a
// one-hot center weight. Throws DataError on non-finite input.
AffinityField normalize_affinity(const AffinityField& raw);

// Shifted copy with clamp boundary: out(r, c) = a(clamp(r+dr), clamp(c+dc)).
template <typename S>
Raster<S> shift_clamp(const Raster<S>& a, int dr, int dc) {
  const Eigen::Index h = a.rows(), w = a.cols();
  Raster<S> rows(h, w);
  if (dr >= 0) {
    Eigen::Index m = std::min<Eigen::Index>(dr, h);
    if (h - m > 0) rows.topRows(h - m) = a.bottomRows(h - m);
    if (m > 0) rows.bottomRows(m) = a.row(h - 1).replicate(m, 1);
  } else {
    Eigen::Index m = std::min<Eigen::Index>(-dr, h);
    if (h - m > 0) rows.bottomRows(h - m) = a.topRows(h - m);
    if (m > 0) rows.topRows(m) = a.row(0).replicate(m, 1);
  }
  Raster<S> out(h, w);
  if (dc >= 0) {
    Eigen::Index m = std::min<Eigen::Index>(dc, w);
    if (w - m > 0) out.leftCols(w - m) = rows.rightCols(w - m);
    if (m > 0) out.rightCols(m) = rows.col(w - 1).replicate(1, m);
  } else {
    Eigen::Index m = std::min<Eigen::Index>(-dc, w);
    if (w - m > 0) out.rightCols(w - m) = rows.leftCols(w - m);
    if (m > 0) out.leftCols(m) = rows.col(0).replicate(1, m);
  }
  return out;
}

// One Jacobi-style diffusion pass over all steps. Each update is a convex
// combination of the pixel's initial value (center weight) and the previous
// step's stencil neighbours; the result is clamped to the hull of those
// terms so convexity survives float rounding. When `trace` is given it
// receives D^0..D^T (after seed reinjection).
template <typename S>
Raster<S> propagate_kernel(const Raster<S>& initial, const Raster<S>& seeds,
                           const std::vector<Raster<S>>& weights, int stencil,
                           int n_steps, bool seed_reinjection,
                           std::vector<Raster<S>>* trace = nullptr) {
  const int radius = (stencil - 1) / 2;
  const int center = (stencil * stencil - 1) / 2;
  const bool have_seeds = seeds.size() > 0;

  Raster<S> cur = initial;
  if (trace) {
    trace->clear();
    trace->push_back(cur);
  }
  for (int t = 0; t < n_steps; ++t) {
    Raster<S> next = weights[center] * initial;
    Raster<S> hull_min = initial;
    Raster<S> hull_max = initial;
    for (int k = 0; k < stencil * stencil; ++k) {
      if (k == center) continue;
      Raster<S> sh = shift_clamp(cur, k / stencil - radius, k % stencil - radius);
      next += weights[k] * sh;
      hull_min = hull_min.min(sh);
      hull_max = hull_max.max(sh);
    }
    next = next.max(hull_min).min(hull_max);
    if (seed_reinjection && have_seeds)
      next = (seeds > S(0)).select(seeds, next);
    cur = std::move(next);
    if (trace) trace->push_back(cur);
  }
  return cur;
}

// Contract checks + kernel dispatch. `affinity` must already be normalized.
DepthMap propagate(const DepthMap& initial, const SparseDepth& seeds,
                   const AffinityField& affinity, const PropagationConfig& cfg);

// Direct scalar-loop evaluation of the same update rule; kept as the test
// oracle for the kernel above and must agree with it bitwise.
DepthMap propagate_reference(const DepthMap& initial, const SparseDepth& seeds,
                             const AffinityField& affinity,
                             const PropagationConfig& cfg);

// Affinity fields serialize as multi-channel .dpr (version 2) files.
AffinityField read_affinity(const std::filesystem::path& path);
void write_affinity(const AffinityField& affinity,
                    const std::filesystem::path& path);

}  // namespace dp

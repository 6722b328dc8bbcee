#include <algorithm>

#include "doctest.h"

#include "depthprompt/sensor_sim.hpp"
#include "test_util.hpp"

using namespace dp;

namespace {
bool subset_of(const SparseDepth& sub, const DepthMap& sup) {
  for (int r = 0; r < sub.rows(); ++r)
    for (int c = 0; c < sub.cols(); ++c)
      if (sub(r, c) > 0.0f && sub(r, c) != sup(r, c)) return false;
  return true;
}
}  // namespace

TEST_CASE("sample_random basics") {
  Rng rng(2);
  DepthMap gt = dptest::random_depth(10, 12, rng, 0.5, 8.0, 0.3);
  const int nv = static_cast<int>(valid_count(gt));

  SparseDepth all = sample_random(gt, nv, 99);
  CHECK(dptest::bitwise_equal(all, gt));

  SparseDepth none = sample_random(gt, 0, 99);
  CHECK(valid_count(none) == 0);

  SparseDepth some = sample_random(gt, nv / 2, 99);
  CHECK(valid_count(some) == nv / 2);
  CHECK(subset_of(some, gt));

  CHECK(dptest::bitwise_equal(sample_random(gt, nv / 2, 7),
                              sample_random(gt, nv / 2, 7)));
  CHECK_THROWS_AS(sample_random(gt, nv + 1, 99), InsufficientSupportError);
}

TEST_CASE("sample_grid lattice enumeration") {
  DepthMap gt = DepthMap::Constant(4, 4, 2.0f);
  SparseDepth s = sample_grid(gt, 2, {0, 0});
  CHECK(valid_count(s) == 4);
  CHECK(s(0, 0) == 2.0f);
  CHECK(s(0, 2) == 2.0f);
  CHECK(s(2, 0) == 2.0f);
  CHECK(s(2, 2) == 2.0f);
  CHECK(s(1, 1) == 0.0f);
  CHECK(s(3, 3) == 0.0f);

  Rng rng(5);
  DepthMap g2 = dptest::random_depth(7, 9, rng, 0.5, 5.0, 0.4);
  CHECK(dptest::bitwise_equal(sample_grid(g2, 1), g2));
  CHECK(valid_count(sample_grid(DepthMap::Zero(5, 5), 2)) == 0);
  CHECK_THROWS_AS(sample_grid(g2, 0), ContractError);
  CHECK_THROWS_AS(sample_grid(g2, 2, {2, 0}), ContractError);
}

TEST_CASE("sample_lines stays in its band") {
  DepthMap gt = DepthMap::Constant(8, 6, 3.0f);

  SparseDepth one = sample_lines(gt, 1, 4);
  std::vector<int> rows;
  for (int r = 0; r < 8; ++r)
    if ((one.row(r) > 0.0f).any()) rows.push_back(r);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0] >= 4);  // default band is the lower half
  CHECK(rows[0] <= 7);

  SparseDepth full = sample_lines(gt, 8, 4, {0.0, 1.0});
  CHECK(dptest::bitwise_equal(full, gt));

  CHECK_THROWS_AS(sample_lines(gt, 5, 4), InsufficientSupportError);

  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    DepthMap g = dptest::random_depth(9, 7, rng, 0.5, 5.0, 0.3);
    SparseDepth s = sample_lines(g, 1 + rng.uniform_int(4), rng.next_u64());
    CHECK(subset_of(s, g));
  }
}

TEST_CASE("mask_range windowing") {
  DepthMap d(1, 3);
  d << 0.5f, 2.0f, 5.0f;
  DepthMap m = mask_range(d, 1.0, 3.0);
  CHECK(m(0, 0) == 0.0f);
  CHECK(m(0, 1) == 2.0f);
  CHECK(m(0, 2) == 0.0f);

  Rng rng(3);
  DepthMap g = dptest::random_depth(6, 6, rng, 0.5, 9.0, 0.2);
  CHECK(dptest::bitwise_equal(
      mask_range(g, 0.0, std::numeric_limits<double>::infinity()), g));

  DepthMap once = mask_range(g, 1.0, 4.0);
  CHECK(dptest::bitwise_equal(once, mask_range(once, 1.0, 4.0)));

  // Composition equals masking by the window intersection.
  DepthMap ab = mask_range(mask_range(g, 1.0, 6.0), 2.0, 8.0);
  CHECK(dptest::bitwise_equal(ab, mask_range(g, 2.0, 6.0)));
}

TEST_CASE("rda degenerate family reproduces the fixed sampler") {
  DepthMap gt = DepthMap::Constant(32, 32, 4.0f);
  BiasSpec spec;
  spec.pattern = SamplePattern::kRandom;
  spec.sample_count = 500;
  spec.count_min = 500;  // fixed draw
  for (std::uint64_t seed : {1ull, 77ull, 901ull}) {
    SparseDepth a = rda_sample(gt, {spec}, seed);
    SparseDepth b = sample_for_spec(gt, spec, derive_seed(seed, 1));
    CHECK(dptest::bitwise_equal(a, b));
    CHECK(valid_count(a) == 500);
  }
}

TEST_CASE("rda outputs are subsets of the source") {
  Rng rng(8);
  DepthMap gt = dptest::random_depth(16, 16, rng, 0.5, 9.0, 0.2);
  BiasSpec random_spec;
  random_spec.sample_count = 100;
  BiasSpec grid_spec;
  grid_spec.pattern = SamplePattern::kGrid;
  grid_spec.grid_stride = 3;
  std::vector<BiasSpec> family = {random_spec, grid_spec};
  for (int i = 0; i < 1000; ++i)
    CHECK(subset_of(rda_sample(gt, family, i), gt));
}

TEST_CASE("rda log-uniform draw has the expected median") {
  DepthMap gt = DepthMap::Constant(32, 32, 4.0f);
  BiasSpec spec;
  spec.sample_count = 500;  // draws over [1, 500]
  std::vector<long> counts;
  for (int i = 0; i < 10000; ++i)
    counts.push_back(valid_count(rda_sample(gt, {spec}, 1000 + i)));
  std::nth_element(counts.begin(), counts.begin() + counts.size() / 2,
                   counts.end());
  long median = counts[counts.size() / 2];
  CHECK(median >= 18);  // sqrt(500) ~ 22.4
  CHECK(median <= 28);
}

TEST_CASE("generate_scene degenerate and range properties") {
  SceneSpec flat;
  flat.height = 12;
  flat.width = 16;
  flat.n_planes = 1;
  flat.max_slope = 0.0;
  flat.rng_seed = 5;
  auto [image, depth] = generate_scene(flat);
  CHECK((depth == depth(0, 0)).all());
  for (const auto& plane : image.planes) {
    float mean = plane.mean();
    CHECK((plane - mean).abs().maxCoeff() <= 2.0f * flat.noise_amp + 1e-6f);
  }

  for (int i = 0; i < 100; ++i) {
    SceneSpec spec;
    spec.height = 10;
    spec.width = 14;
    spec.n_planes = 5;
    spec.rng_seed = 100 + i;
    auto [img, d] = generate_scene(spec);
    CHECK((d >= static_cast<float>(spec.min_depth)).all());
    CHECK((d <= static_cast<float>(spec.max_depth)).all());
    CHECK(valid_count(d) == d.size());
    for (const auto& plane : img.planes) {
      CHECK((plane >= 0.0f).all());
      CHECK((plane <= 1.0f).all());
    }
  }

  SceneSpec spec;
  spec.rng_seed = 77;
  auto [img1, d1] = generate_scene(spec);
  auto [img2, d2] = generate_scene(spec);
  CHECK(dptest::bitwise_equal(d1, d2));
  for (int ch = 0; ch < 3; ++ch)
    CHECK(dptest::bitwise_equal(img1.planes[ch], img2.planes[ch]));
}

TEST_CASE("samplers copy values verbatim and never invent pixels") {
  Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    DepthMap gt = dptest::random_depth(12, 12, rng, 0.5, 9.0, 0.3);
    int nv = static_cast<int>(valid_count(gt));
    SparseDepth s = sample_random(gt, std::min(20, nv), rng.next_u64());
    CHECK(subset_of(s, gt));
    SparseDepth g = sample_grid(gt, 1 + rng.uniform_int(4));
    CHECK(subset_of(g, gt));
  }
}

#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "depthprompt/harness/config.hpp"
#include "depthprompt/sensor_sim.hpp"

namespace dp {

struct CorpusSpec {
  SceneSpec scene;       // per-scene template; rng_seed is the corpus base seed
  int count = 160;
};

// On-disk corpus of paired scene files plus a manifest. Scene i is generated
// with seed base_seed + i, so scenes are independent and regenerable.
struct Corpus {
  std::filesystem::path dir;
  SceneSpec scene;
  int count = 0;

  std::pair<Image, DepthMap> load(int index) const;
  std::filesystem::path image_path(int index) const;
  std::filesystem::path gt_path(int index) const;
};

Corpus generate_corpus(const CorpusSpec& spec, const std::filesystem::path& dir);
Corpus open_corpus(const std::filesystem::path& dir);

// Deterministic disjoint split over scene indices.
struct SplitIndices {
  std::vector<int> train, val, test;
};
SplitIndices split_corpus(const Corpus& corpus, const SplitConfig& cfg);

}  // namespace dp

#include "depthprompt/harness/corpus.hpp"

#include <cstdio>
#include <fstream>

#include "depthprompt/raster_io.hpp"
#include "depthprompt/rng.hpp"

namespace dp {
namespace {

std::string scene_name(int index, const char* kind) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "scene_%05d.%s.dpr", index, kind);
  return buf;
}

}  // namespace

std::filesystem::path Corpus::image_path(int index) const {
  return dir / scene_name(index, "img");
}

std::filesystem::path Corpus::gt_path(int index) const {
  return dir / scene_name(index, "gt");
}

std::pair<Image, DepthMap> Corpus::load(int index) const {
  if (index < 0 || index >= count)
    throw ContractError("corpus: scene index out of range");
  return {read_image(image_path(index)), read_raster(gt_path(index))};
}

Corpus generate_corpus(const CorpusSpec& spec, const std::filesystem::path& dir) {
  if (spec.count < 1) throw ConfigError("generate_corpus: count must be >= 1");
  std::filesystem::create_directories(dir);

  nlohmann::json files = nlohmann::json::array();
  for (int i = 0; i < spec.count; ++i) {
    SceneSpec s = spec.scene;
    s.rng_seed = spec.scene.rng_seed + static_cast<std::uint64_t>(i);
    auto [image, gt] = generate_scene(s);
    write_image(image, dir / scene_name(i, "img"));
    write_raster(gt, dir / scene_name(i, "gt"));
    files.push_back({{"img", scene_name(i, "img")},
                     {"gt", scene_name(i, "gt")},
                     {"rng_seed", s.rng_seed}});
  }

  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["count"] = spec.count;
  manifest["scene"] = to_json(spec.scene);
  manifest["files"] = std::move(files);
  std::ofstream os(dir / "manifest.json");
  if (!os) throw IoError("generate_corpus: cannot write manifest");
  os << manifest.dump(2) << "\n";

  Corpus c;
  c.dir = dir;
  c.scene = spec.scene;
  c.count = spec.count;
  return c;
}

Corpus open_corpus(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw IoError("open_corpus: missing manifest in " + dir.string());
  nlohmann::json manifest;
  try {
    is >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("open_corpus: bad manifest: " + std::string(e.what()));
  }
  Corpus c;
  c.dir = dir;
  c.count = manifest.at("count").get<int>();
  c.scene = scene_spec_from_json(manifest.at("scene"));
  return c;
}

SplitIndices split_corpus(const Corpus& corpus, const SplitConfig& cfg) {
  if (cfg.n_train + cfg.n_val + cfg.n_test > corpus.count)
    throw ConfigError("split_corpus: split sizes exceed corpus size");
  std::vector<int> order(corpus.count);
  for (int i = 0; i < corpus.count; ++i) order[i] = i;
  Rng rng(cfg.seed);
  for (int i = 0; i < corpus.count - 1; ++i) {
    int j = i + rng.uniform_int(corpus.count - i);
    std::swap(order[i], order[j]);
  }
  SplitIndices s;
  auto it = order.begin();
  s.train.assign(it, it + cfg.n_train);
  it += cfg.n_train;
  s.val.assign(it, it + cfg.n_val);
  it += cfg.n_val;
  s.test.assign(it, it + cfg.n_test);
  return s;
}

}  // namespace dp

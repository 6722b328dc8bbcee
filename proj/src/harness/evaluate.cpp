#include "depthprompt/harness/evaluate.hpp"

#include "depthprompt/checkpoint.hpp"
#include "depthprompt/rng.hpp"

namespace dp {

MetricReport evaluate_scenes(const PredictFn& predict, const Corpus& corpus,
                             const std::vector<int>& indices,
                             const BiasSpec& test_spec, const EvalOptions& opts) {
  const double window_min = std::max(opts.min_depth, test_spec.range_min);
  const double window_max = test_spec.range_max;

  MetricAccumulator acc;
  for (int idx : indices) {
    auto [image, gt] = corpus.load(idx);
    SparseDepth sparse = sample_for_spec(
        gt, test_spec, derive_seed(opts.sample_seed, static_cast<std::uint64_t>(idx)));
    DepthMap pred = predict(image, sparse);
    require_same_shape(pred, gt, "evaluate_scenes");

    // Scenes that the window empties contribute nothing.
    Raster<double> g = gt.cast<double>();
    if (!((g > 0.0) && (g >= window_min) && (g <= window_max)).any()) continue;
    acc.add(pred, gt, window_min, window_max);
  }
  return acc.report();
}

MetricReport evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                 const RunConfig& cfg) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  ModelConfig model_cfg = model_config_from_json(ckpt.manifest.at("model"));
  const std::string stage = ckpt.manifest.value("stage", "prompt");

  auto foundation = std::make_shared<FoundationModel<float>>(model_cfg);
  auto prompt = std::make_shared<PromptModule<float>>(model_cfg);
  if (stage == "foundation") {
    assign_params(ckpt, foundation->parameters());
  } else {
    std::vector<nn::Param<float>*> params = foundation->parameters();
    for (auto* p : prompt->parameters()) params.push_back(p);
    assign_params(ckpt, params);
  }

  Corpus corpus = open_corpus(cfg.corpus);
  SplitIndices split = split_corpus(corpus, cfg.split);
  if (split.test.empty()) throw ConfigError("evaluate: empty test split");

  PropagationConfig prop = cfg.propagation;
  PredictFn predict = [foundation, prompt, prop,
                       stage](const Image& image, const SparseDepth& sparse) {
    if (stage == "foundation") {
      // Backbone alone: scale-aligned monocular prediction.
      nn::Graph<float> g;
      auto* x = g.input(image_input_tensor<float>(image));
      auto out = foundation->forward(g, x);
      nn::Graph<float>::ScaleAlignInfo info;
      auto* scaled = g.scale_align(out.relative, sparse, &info);
      return nn::raster_from_tensor(scaled->value, 0);
    }
    return forward_pipeline(image, sparse, *foundation, *prompt, prop).final;
  };

  EvalOptions opts;
  opts.min_depth = cfg.eval_min_depth;
  opts.sample_seed = derive_seed(cfg.seed, 0xeba1);
  return evaluate_scenes(predict, corpus, split.test, cfg.test_bias, opts);
}

}  // namespace dp

#include "depthprompt/harness/train.hpp"

#include <cmath>
#include <fstream>

#include "depthprompt/checkpoint.hpp"
#include "depthprompt/nn/adam.hpp"
#include "depthprompt/rng.hpp"

namespace dp {
namespace {

constexpr std::uint64_t kSampleSalt = 0x5a17;
constexpr std::uint64_t kShuffleSalt = 0xe000;
constexpr std::uint64_t kFoundationInitSalt = 0x01;
constexpr std::uint64_t kPromptInitSalt = 0x02;

double lr_at(const OptimizerConfig& opt, long step, long total_steps) {
  double factor = 1.0;
  const double fraction =
      total_steps > 0 ? static_cast<double>(step) / total_steps : 0.0;
  for (std::size_t i = 0; i < opt.decay_milestones.size() &&
                          i < opt.decay_factors.size();
       ++i)
    if (fraction >= opt.decay_milestones[i]) factor = opt.decay_factors[i];
  return opt.learning_rate * factor;
}

nlohmann::json checkpoint_manifest(const RunConfig& cfg) {
  nlohmann::json m;
  m["model"] = to_json(cfg.model);
  m["stage"] = cfg.stage;
  m["rng"] = {{"seed", cfg.seed}, {"split_seed", cfg.split.seed}};
  m["provenance"] = {{"config_hash", config_hash(to_json(cfg))},
                     {"timestamp", provenance_timestamp()}};
  return m;
}

}  // namespace

SparseDepth draw_train_sample(const DepthMap& gt, const RunConfig& cfg,
                              std::uint64_t sample_seed) {
  if (cfg.rda_enabled) {
    if (cfg.rda_family.empty())
      throw ConfigError("rda_enabled requires a non-empty rda_family");
    return rda_sample(gt, cfg.rda_family, sample_seed);
  }
  return sample_for_spec(gt, cfg.train_bias, derive_seed(sample_seed, 1));
}

TrainResult train(const RunConfig& cfg) {
  if (cfg.checkpoint_out.empty())
    throw ConfigError("train: checkpoint_out must be set");
  if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");

  Corpus corpus = open_corpus(cfg.corpus);
  SplitIndices split = split_corpus(corpus, cfg.split);
  if (split.train.empty()) throw ConfigError("train: empty training split");

  // Preload the split; scenes are small at desk scale.
  std::vector<Image> images;
  std::vector<DepthMap> gts, sup_gts;
  images.reserve(split.train.size());
  for (int idx : split.train) {
    auto [img, gt] = corpus.load(idx);
    sup_gts.push_back(cfg.train_bias.range_bounded()
                          ? mask_range(gt, cfg.train_bias.range_min,
                                       cfg.train_bias.range_max)
                          : gt);
    images.push_back(std::move(img));
    gts.push_back(std::move(gt));
  }

  const bool foundation_stage = cfg.stage == "foundation";
  FoundationModel<float> foundation(cfg.model,
                                    derive_seed(cfg.seed, kFoundationInitSalt));
  PromptModule<float> prompt(cfg.model, derive_seed(cfg.seed, kPromptInitSalt));

  // The prompt stage always trains under bias tuning; without a pretrained
  // checkpoint (the no-pretraining ablation) the frozen weights are simply
  // the random initialization, isolating pretraining as the only change.
  if (!foundation_stage) {
    if (!cfg.foundation_checkpoint.empty()) {
      Checkpoint ckpt = load_checkpoint(cfg.foundation_checkpoint);
      assign_params(ckpt, foundation.parameters());
    }
    apply_bias_tuning(foundation);
  }

  std::vector<nn::Param<float>*> params = foundation.parameters();
  if (!foundation_stage)
    for (auto* p : prompt.parameters()) params.push_back(p);
  std::vector<nn::Param<float>*> saved = params;

  nn::Adam<float> adam(params);
  for (auto* p : params) p->zero_grad();

  const int n_scenes = static_cast<int>(split.train.size());
  const int batch = std::max(1, cfg.optimizer.batch_size);
  const long steps_per_epoch = (n_scenes + batch - 1) / batch;
  const long total_steps = steps_per_epoch * cfg.epochs;

  std::ofstream curve(cfg.checkpoint_out.string() + ".curve.csv");
  curve << "epoch,step,loss\n";

  TrainResult result;
  result.checkpoint = cfg.checkpoint_out;
  bool have_step0 = false;
  long global_step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order(n_scenes);
    for (int i = 0; i < n_scenes; ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(cfg.seed, kShuffleSalt + epoch));
    for (int i = 0; i < n_scenes - 1; ++i) {
      int j = i + shuffle_rng.uniform_int(n_scenes - i);
      std::swap(order[i], order[j]);
    }

    double epoch_loss = 0.0;
    long epoch_n = 0;
    for (int begin = 0; begin < n_scenes; begin += batch) {
      const int end = std::min(begin + batch, n_scenes);
      double batch_loss = 0.0;
      int batch_n = 0;
      for (int bi = begin; bi < end; ++bi) {
        const int i = order[bi];
        const DepthMap& sup = sup_gts[i];
        if (valid_count(sup) == 0) continue;  // window emptied this scene

        const std::uint64_t sample_seed = derive_seed(
            derive_seed(cfg.seed, kSampleSalt),
            static_cast<std::uint64_t>(epoch) * n_scenes + i);

        nn::Graph<float> graph;
        double sample_loss = 0.0;
        if (foundation_stage) {
          auto* image_node = graph.input(image_input_tensor<float>(images[i]));
          auto out = foundation.forward(graph, image_node);
          Raster<double> rel =
              nn::raster_from_tensor(out.relative->value, 0).cast<double>();
          LossResult si = loss_si(rel, sup.cast<double>().eval(), cfg.loss.lambda_si);
          sample_loss = si.value;
          graph.seed_gradient(out.relative,
                              (si.grad / static_cast<double>(end - begin)).eval());
        } else {
          SparseDepth sparse = draw_train_sample(gts[i], cfg, sample_seed);
          auto nodes =
              build_pipeline(graph, foundation, prompt, images[i], sparse,
                             cfg.propagation);
          Raster<double> final_d =
              nn::raster_from_tensor(nodes.final->value, 0).cast<double>();
          Raster<double> init_d =
              nn::raster_from_tensor(nodes.initial_metric->value, 0).cast<double>();
          Raster<double> sup_d = sup.cast<double>();
          LossResult comb = loss_comb(final_d, sup_d);
          LossResult si = loss_si(init_d, sup_d, cfg.loss.lambda_si);
          sample_loss = comb.value + cfg.loss.mu * si.value;
          const double scale = 1.0 / (end - begin);
          graph.seed_gradient(nodes.final, (comb.grad * scale).eval());
          graph.seed_gradient(nodes.initial_metric,
                              (si.grad * (cfg.loss.mu * scale)).eval());
        }

        if (!std::isfinite(sample_loss))
          throw DivergenceError(
              "train: non-finite loss at epoch " + std::to_string(epoch) +
              "; last-good checkpoint: " + cfg.checkpoint_out.string());
        graph.backward();
        batch_loss += sample_loss;
        ++batch_n;
      }
      if (batch_n == 0) continue;

      batch_loss /= batch_n;
      if (!have_step0) {
        result.step0_loss = batch_loss;
        have_step0 = true;
      }
      adam.step(lr_at(cfg.optimizer, global_step, total_steps));
      for (auto* p : params) p->zero_grad();
      curve << epoch << "," << global_step << "," << batch_loss << "\n";
      ++global_step;
      epoch_loss += batch_loss * batch_n;
      epoch_n += batch_n;
    }
    if (epoch_n == 0) throw ConfigError("train: no usable training scene");
    result.epoch_mean_loss.push_back(epoch_loss / epoch_n);
    save_checkpoint(cfg.checkpoint_out, checkpoint_manifest(cfg), saved);
  }
  return result;
}

}  // namespace dp

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "depthprompt/harness/bias_study.hpp"
#include "depthprompt/harness/evaluate.hpp"
#include "depthprompt/harness/train.hpp"
#include "depthprompt/raster_io.hpp"

namespace {

dp::RasterFormat format_for(const std::filesystem::path& path) {
  return path.extension() == ".png" ? dp::RasterFormat::kPng16Mm
                                    : dp::RasterFormat::kFloat32Raster;
}

dp::DepthMap read_auto(const std::filesystem::path& path) {
  return dp::read_raster(path, format_for(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensor-agnostic depth completion: sparse-measurement "
               "simulation, prompt-guided spatial propagation on a frozen "
               "relative-depth backbone, and a bias-study harness"};
  app.require_subcommand(1);
  app.fallthrough();  // global --config/--seed/--out also parse after the subcommand

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::string out_override;
  app.add_option("--config", config_path, "Configuration file (JSON)");
  app.add_option("--seed", seed_override, "Override the config RNG seed");
  app.add_option("--out", out_override, "Override the output directory");

  // generate ------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "Generate a synthetic scene corpus");
  int gen_count = 160;
  dp::SceneSpec gen_scene;
  gen->add_option("--count", gen_count, "Number of scenes");
  gen->add_option("--height", gen_scene.height);
  gen->add_option("--width", gen_scene.width);
  gen->add_option("--planes", gen_scene.n_planes, "Planar cells per scene");
  gen->add_option("--depth-min", gen_scene.min_depth);
  gen->add_option("--depth-max", gen_scene.max_depth);

  // train ---------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "Train the foundation or prompt stage");

  // evaluate ------------------------------------------------------------
  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test split");
  std::string ev_checkpoint;
  ev->add_option("--checkpoint", ev_checkpoint, "Checkpoint file")->required();

  // bias-study ----------------------------------------------------------
  auto* bs = app.add_subcommand("bias-study", "Run the sensor-bias case study");
  bool bs_train_missing = false;
  bs->add_flag("--train-missing", bs_train_missing,
               "Train any missing variant checkpoints first");

  // propagate -----------------------------------------------------------
  auto* pr = app.add_subcommand("propagate", "Diffuse seeds through an affinity field");
  std::string pr_initial, pr_seeds, pr_affinity, pr_out;
  int pr_steps = 6;
  bool pr_no_reinjection = false;
  pr->add_option("--initial", pr_initial, "Initial depth raster")->required();
  pr->add_option("--seeds", pr_seeds, "Seed raster (sparse depth)")->required();
  pr->add_option("--affinity", pr_affinity, "Affinity file (.dpr v2)")->required();
  pr->add_option("--output", pr_out, "Output raster path")->required();
  pr->add_option("--steps", pr_steps, "Propagation steps");
  pr->add_flag("--no-reinjection", pr_no_reinjection, "Do not re-impose seeds per step");

  // scale-fit -----------------------------------------------------------
  auto* sf = app.add_subcommand("scale-fit", "Least-squares scale between two rasters");
  std::string sf_relative, sf_sparse;
  sf->add_option("--relative", sf_relative, "Relative depth raster")->required();
  sf->add_option("--sparse", sf_sparse, "Sparse metric raster")->required();

  // metrics -------------------------------------------------------------
  auto* me = app.add_subcommand("metrics", "RMSE / MAE / DELTA1 between rasters");
  std::string me_pred, me_gt;
  double me_min = 1e-3, me_max = std::numeric_limits<double>::infinity();
  me->add_option("--pred", me_pred, "Prediction raster")->required();
  me->add_option("--gt", me_gt, "Ground-truth raster")->required();
  me->add_option("--min-depth", me_min, "Evaluation window lower bound (m)");
  me->add_option("--max-depth", me_max, "Evaluation window upper bound (m)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      if (out_override.empty())
        throw dp::ConfigError("generate: --out <dir> is required");
      dp::CorpusSpec spec;
      spec.scene = gen_scene;
      spec.count = gen_count;
      if (seed_override) spec.scene.rng_seed = *seed_override;
      dp::Corpus corpus = dp::generate_corpus(spec, out_override);
      std::printf("generated %d scenes in %s\n", corpus.count,
                  corpus.dir.string().c_str());
    } else if (tr->parsed()) {
      if (config_path.empty())
        throw dp::ConfigError("train: --config <file> is required");
      dp::RunConfig cfg = dp::load_run_config(config_path);
      if (seed_override) cfg.seed = *seed_override;
      if (!out_override.empty())
        cfg.checkpoint_out = std::filesystem::path(out_override) /
                             cfg.checkpoint_out.filename();
      dp::TrainResult res = dp::train(cfg);
      std::printf("checkpoint: %s\n", res.checkpoint.string().c_str());
      for (std::size_t e = 0; e < res.epoch_mean_loss.size(); ++e)
        std::printf("epoch %zu mean loss %.6f\n", e, res.epoch_mean_loss[e]);
    } else if (ev->parsed()) {
      if (config_path.empty())
        throw dp::ConfigError("evaluate: --config <file> is required");
      dp::RunConfig cfg = dp::load_run_config(config_path);
      if (seed_override) cfg.seed = *seed_override;
      dp::MetricReport rep = dp::evaluate_checkpoint(ev_checkpoint, cfg);
      std::printf("%s\n", rep.to_json().c_str());
    } else if (bs->parsed()) {
      if (config_path.empty())
        throw dp::ConfigError("bias-study: --config <file> is required");
      dp::StudyConfig cfg = dp::load_study_config(config_path);
      if (bs_train_missing) cfg.train_missing = true;
      if (seed_override) cfg.base.seed = *seed_override;
      if (!out_override.empty()) cfg.out_dir = out_override;
      dp::StudyReport report = dp::run_bias_study(cfg);
      std::printf("study written to %s (%zu cells)\n",
                  cfg.out_dir.string().c_str(), report.cells.size());
    } else if (pr->parsed()) {
      dp::DepthMap initial = read_auto(pr_initial);
      dp::SparseDepth seeds = read_auto(pr_seeds);
      dp::AffinityField affinity =
          dp::normalize_affinity(dp::read_affinity(pr_affinity));
      dp::PropagationConfig cfg;
      cfg.n_steps = pr_steps;
      cfg.seed_reinjection = !pr_no_reinjection;
      dp::DepthMap out = dp::propagate(initial, seeds, affinity, cfg);
      dp::write_raster(out, pr_out, format_for(pr_out));
      std::printf("wrote %s\n", pr_out.c_str());
    } else if (sf->parsed()) {
      dp::ScaleFit fit = dp::fit_scale(read_auto(sf_relative), read_auto(sf_sparse));
      if (fit.p_hat <= 0.0)
        std::fprintf(stderr, "warning: non-positive scale %g\n", fit.p_hat);
      std::printf("%s\n", fit.to_json().c_str());
    } else if (me->parsed()) {
      dp::MetricReport rep =
          dp::compute_metrics(read_auto(me_pred), read_auto(me_gt), me_min, me_max);
      std::printf("%s\n", rep.to_json().c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

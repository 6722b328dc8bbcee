#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "depthprompt/losses.hpp"
#include "depthprompt/models.hpp"
#include "depthprompt/propagation.hpp"
#include "depthprompt/sensor_sim.hpp"

namespace dp {

struct SplitConfig {
  std::uint64_t seed = 1;
  int n_train = 96;
  int n_val = 0;
  int n_test = 64;
};

struct OptimizerConfig {
  double learning_rate = 2e-3;
  std::vector<double> decay_factors = {0.5, 0.1, 0.05};
  // Fractions of the total step budget at which each factor kicks in; the
  // defaults mirror a decay at 40/60/80% of the run.
  std::vector<double> decay_milestones = {0.4, 0.6, 0.8};
  int batch_size = 2;
};

// One training or evaluation run, config-file keys mirror the field names.
struct RunConfig {
  std::filesystem::path corpus;
  std::string stage = "prompt";  // "foundation" pretrains the backbone
  SplitConfig split;
  BiasSpec train_bias;
  BiasSpec test_bias;
  PropagationConfig propagation;
  LossConfig loss;
  OptimizerConfig optimizer;
  int epochs = 5;
  bool rda_enabled = false;
  std::vector<BiasSpec> rda_family;
  ModelConfig model;
  std::filesystem::path foundation_checkpoint;  // empty = random init
  std::filesystem::path checkpoint_out;
  double eval_min_depth = 1e-3;
  std::uint64_t seed = 7;
};

// JSON (de)serialization. Unbounded range windows serialize max as null.
nlohmann::json to_json(const BiasSpec& spec);
BiasSpec bias_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// FNV-1a over the canonical JSON dump; used for report provenance.
std::uint64_t config_hash(const nlohmann::json& j);

// ISO-8601 UTC timestamp; honours SOURCE_DATE_EPOCH for reproducible runs.
std::string provenance_timestamp();

}  // namespace dp

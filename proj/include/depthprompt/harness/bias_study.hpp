#pragma once

#include <string>
#include <vector>

#include "depthprompt/harness/config.hpp"
#include "depthprompt/metrics.hpp"

namespace dp {

// One bias axis: a training condition and the test conditions it is probed
// under (the first test is conventionally the matched condition).
struct StudyCondition {
  std::string axis;
  BiasSpec train;
  std::vector<BiasSpec> tests;
  std::vector<std::string> variants = {"full"};
};

struct StudyConfig {
  std::filesystem::path corpus;
  std::filesystem::path checkpoint_dir;
  std::filesystem::path out_dir;
  RunConfig base;
  std::vector<StudyCondition> conditions;
  int foundation_epochs = 0;  // 0: use base.epochs
  bool train_missing = false;
  bool write_plots = true;
};

struct StudyCell {
  std::string axis;
  std::string variant;
  BiasSpec train_bias;
  BiasSpec test_bias;
  int test_index = 0;
  MetricReport metrics;
};

struct StudyReport {
  nlohmann::json provenance;
  std::string footer;
  std::vector<StudyCell> cells;

  nlohmann::json to_json() const;
  static StudyReport from_json(const nlohmann::json& j);

  const StudyCell* find(const std::string& axis, const std::string& variant,
                        int test_index) const;
};

// Known variants: full, no_prompt, no_pretrain, no_ls, no_spn, rda. Returns
// the training config for a variant under the given condition; the mutation
// touches exactly the declared ablation axis.
RunConfig variant_run_config(const RunConfig& base, const std::string& variant,
                             const StudyCondition& condition,
                             const std::filesystem::path& checkpoint_dir);

std::filesystem::path variant_checkpoint_path(
    const std::filesystem::path& checkpoint_dir, const std::string& axis,
    const std::string& variant);

// Requires trained checkpoints for every (condition, variant) pair unless
// train_missing is set, in which case it trains the gaps (foundation first).
// Emits report JSON, a flat CSV and per-axis PNG charts into out_dir.
StudyReport run_bias_study(const StudyConfig& config);

void write_study_outputs(const StudyReport& report,
                         const std::filesystem::path& out_dir, bool plots);

StudyConfig load_study_config(const std::filesystem::path& path);
nlohmann::json to_json(const StudyConfig& config);
StudyConfig study_config_from_json(const nlohmann::json& j);

}  // namespace dp

#include "depthprompt/harness/bias_study.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "depthprompt/harness/evaluate.hpp"
#include "depthprompt/harness/plot.hpp"
#include "depthprompt/harness/train.hpp"

namespace dp {
namespace {

const char kFooter[] =
    "Synthetic desk-scale study: cells support ordering and degradation-ratio "
    "comparisons between variants and conditions, not absolute benchmark "
    "numbers.";

std::string condition_label(const BiasSpec& spec) {
  std::string s;
  switch (spec.pattern) {
    case SamplePattern::kRandom:
      s = "RND-" + std::to_string(spec.sample_count);
      break;
    case SamplePattern::kGrid:
      s = "GRID-" + std::to_string(spec.grid_stride);
      break;
    case SamplePattern::kLine:
      s = "LINE-" + std::to_string(spec.line_count);
      break;
  }
  if (spec.range_bounded()) {
    s += " " + std::to_string(spec.range_min).substr(0, 3) + "-";
    s += std::isfinite(spec.range_max)
             ? std::to_string(spec.range_max).substr(0, 4)
             : std::string("INF");
    s += "M";
  }
  return s;
}

}  // namespace

std::filesystem::path variant_checkpoint_path(
    const std::filesystem::path& checkpoint_dir, const std::string& axis,
    const std::string& variant) {
  return checkpoint_dir / (axis + "_" + variant + ".ckpt");
}

RunConfig variant_run_config(const RunConfig& base, const std::string& variant,
                             const StudyCondition& condition,
                             const std::filesystem::path& checkpoint_dir) {
  RunConfig cfg = base;
  cfg.stage = "prompt";
  cfg.train_bias = condition.train;
  cfg.rda_enabled = false;
  cfg.rda_family.clear();
  cfg.foundation_checkpoint = checkpoint_dir / "foundation.ckpt";
  cfg.checkpoint_out =
      variant_checkpoint_path(checkpoint_dir, condition.axis, variant);

  if (variant == "full") {
  } else if (variant == "no_prompt") {
    cfg.model.use_prompt = false;
  } else if (variant == "no_pretrain") {
    cfg.foundation_checkpoint.clear();
  } else if (variant == "no_ls") {
    cfg.model.use_ls = false;
  } else if (variant == "no_spn") {
    cfg.model.use_spn = false;
  } else if (variant == "rda") {
    cfg.rda_enabled = true;
    BiasSpec family = condition.train;
    family.count_min = 1;
    cfg.rda_family = {family};
  } else {
    throw ConfigError("unknown study variant: " + variant);
  }
  return cfg;
}

StudyReport run_bias_study(const StudyConfig& config) {
  if (config.conditions.empty())
    throw ConfigError("bias study: no conditions configured");
  std::filesystem::create_directories(config.checkpoint_dir);
  std::filesystem::create_directories(config.out_dir);

  // Resolve the checkpoint set this study needs.
  bool needs_foundation = false;
  std::vector<std::pair<const StudyCondition*, std::string>> runs;
  for (const auto& cond : config.conditions)
    for (const auto& variant : cond.variants) {
      runs.emplace_back(&cond, variant);
      if (variant != "no_pretrain") needs_foundation = true;
    }

  const auto foundation_path = config.checkpoint_dir / "foundation.ckpt";
  std::vector<std::string> missing;
  if (needs_foundation && !std::filesystem::exists(foundation_path))
    missing.push_back(foundation_path.string());
  for (const auto& [cond, variant] : runs) {
    auto p = variant_checkpoint_path(config.checkpoint_dir, cond->axis, variant);
    if (!std::filesystem::exists(p)) missing.push_back(p.string());
  }
  if (!missing.empty() && !config.train_missing) {
    std::string msg = "bias study: missing variant checkpoints:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw ConfigError(msg);
  }

  if (!missing.empty()) {
    if (needs_foundation && !std::filesystem::exists(foundation_path)) {
      RunConfig f = config.base;
      f.stage = "foundation";
      f.train_bias = BiasSpec{};  // unbounded window; backbone sees all ranges
      f.rda_enabled = false;
      f.rda_family.clear();
      f.foundation_checkpoint.clear();
      f.checkpoint_out = foundation_path;
      if (config.foundation_epochs > 0) f.epochs = config.foundation_epochs;
      train(f);
    }
    std::set<std::string> done;
    for (const auto& [cond, variant] : runs) {
      auto path = variant_checkpoint_path(config.checkpoint_dir, cond->axis, variant);
      if (std::filesystem::exists(path) || done.count(path.string())) continue;
      train(variant_run_config(config.base, variant, *cond, config.checkpoint_dir));
      done.insert(path.string());
    }
  }

  StudyReport report;
  report.footer = kFooter;
  report.provenance = {{"schema_version", 1},
                       {"config_hash", config_hash(to_json(config))},
                       {"seed", config.base.seed},
                       {"timestamp", provenance_timestamp()}};

  for (const auto& cond : config.conditions)
    for (const auto& variant : cond.variants) {
      auto ckpt = variant_checkpoint_path(config.checkpoint_dir, cond.axis, variant);
      for (std::size_t ti = 0; ti < cond.tests.size(); ++ti) {
        RunConfig eval_cfg = config.base;
        eval_cfg.corpus = config.corpus;
        eval_cfg.test_bias = cond.tests[ti];
        StudyCell cell;
        cell.axis = cond.axis;
        cell.variant = variant;
        cell.train_bias = cond.train;
        cell.test_bias = cond.tests[ti];
        cell.test_index = static_cast<int>(ti);
        cell.metrics = evaluate_checkpoint(ckpt, eval_cfg);
        report.cells.push_back(std::move(cell));
      }
    }

  write_study_outputs(report, config.out_dir, config.write_plots);
  {
    std::ofstream os(config.out_dir / "study_config.json");
    os << to_json(config).dump(2) << "\n";
  }
  return report;
}

nlohmann::json StudyReport::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["provenance"] = provenance;
  j["footer"] = footer;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& cell : cells) {
    nlohmann::json c;
    c["axis"] = cell.axis;
    c["variant"] = cell.variant;
    c["train_bias"] = dp::to_json(cell.train_bias);
    c["test_bias"] = dp::to_json(cell.test_bias);
    c["test_index"] = cell.test_index;
    c["metrics"] = {{"rmse", cell.metrics.rmse},
                    {"mae", cell.metrics.mae},
                    {"delta1", cell.metrics.delta1},
                    {"n_valid", cell.metrics.n_valid}};
    arr.push_back(std::move(c));
  }
  j["cells"] = std::move(arr);
  return j;
}

StudyReport StudyReport::from_json(const nlohmann::json& j) {
  StudyReport r;
  r.provenance = j.at("provenance");
  r.footer = j.at("footer").get<std::string>();
  for (const auto& c : j.at("cells")) {
    StudyCell cell;
    cell.axis = c.at("axis").get<std::string>();
    cell.variant = c.at("variant").get<std::string>();
    cell.train_bias = bias_spec_from_json(c.at("train_bias"));
    cell.test_bias = bias_spec_from_json(c.at("test_bias"));
    cell.test_index = c.at("test_index").get<int>();
    cell.metrics.rmse = c.at("metrics").at("rmse").get<double>();
    cell.metrics.mae = c.at("metrics").at("mae").get<double>();
    cell.metrics.delta1 = c.at("metrics").at("delta1").get<double>();
    cell.metrics.n_valid = c.at("metrics").at("n_valid").get<long>();
    r.cells.push_back(std::move(cell));
  }
  return r;
}

const StudyCell* StudyReport::find(const std::string& axis,
                                   const std::string& variant,
                                   int test_index) const {
  for (const auto& c : cells)
    if (c.axis == axis && c.variant == variant && c.test_index == test_index)
      return &c;
  return nullptr;
}

void write_study_outputs(const StudyReport& report,
                         const std::filesystem::path& out_dir, bool plots) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream os(out_dir / "study.json", std::ios::binary | std::ios::trunc);
    os << report.to_json().dump(2) << "\n";
  }
  {
    std::ofstream os(out_dir / "study.csv", std::ios::trunc);
    os << "axis,variant,test_index,test_label,rmse,mae,delta1,n_valid\n";
    for (const auto& c : report.cells)
      os << c.axis << "," << c.variant << "," << c.test_index << ","
         << condition_label(c.test_bias) << "," << c.metrics.rmse << ","
         << c.metrics.mae << "," << c.metrics.delta1 << ","
         << c.metrics.n_valid << "\n";
  }
  if (!plots) return;

  // One grouped RMSE bar chart per axis.
  std::vector<std::string> axes;
  for (const auto& c : report.cells)
    if (std::find(axes.begin(), axes.end(), c.axis) == axes.end())
      axes.push_back(c.axis);
  for (const auto& axis : axes) {
    std::vector<std::string> variants, groups;
    for (const auto& c : report.cells) {
      if (c.axis != axis) continue;
      if (std::find(variants.begin(), variants.end(), c.variant) == variants.end())
        variants.push_back(c.variant);
      std::string label = condition_label(c.test_bias);
      if (std::find(groups.begin(), groups.end(), label) == groups.end())
        groups.push_back(label);
    }
    BarChart chart;
    chart.title = "RMSE BY TEST CONDITION (" + axis + ")";
    chart.group_labels = groups;
    for (const auto& v : variants) {
      std::vector<double> vals;
      for (int ti = 0; ti < static_cast<int>(groups.size()); ++ti) {
        const StudyCell* cell = report.find(axis, v, ti);
        vals.push_back(cell ? cell->metrics.rmse : 0.0);
      }
      chart.series.push_back({v, vals});
    }
    write_bar_chart_png(chart, out_dir / ("study_" + axis + ".png"));
  }
}

nlohmann::json to_json(const StudyConfig& config) {
  nlohmann::json j;
  j["corpus"] = config.corpus.string();
  j["checkpoint_dir"] = config.checkpoint_dir.string();
  j["out_dir"] = config.out_dir.string();
  j["base"] = to_json(config.base);
  j["foundation_epochs"] = config.foundation_epochs;
  j["train_missing"] = config.train_missing;
  j["write_plots"] = config.write_plots;
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : config.conditions) {
    nlohmann::json jc;
    jc["axis"] = c.axis;
    jc["train"] = to_json(c.train);
    nlohmann::json tests = nlohmann::json::array();
    for (const auto& t : c.tests) tests.push_back(to_json(t));
    jc["tests"] = std::move(tests);
    jc["variants"] = c.variants;
    conds.push_back(std::move(jc));
  }
  j["conditions"] = std::move(conds);
  return j;
}

StudyConfig study_config_from_json(const nlohmann::json& j) {
  StudyConfig c;
  c.corpus = j.at("corpus").get<std::string>();
  c.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
  c.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("base")) c.base = run_config_from_json(j["base"]);
  c.base.corpus = c.corpus;
  c.foundation_epochs = j.value("foundation_epochs", 0);
  c.train_missing = j.value("train_missing", false);
  c.write_plots = j.value("write_plots", true);
  for (const auto& jc : j.at("conditions")) {
    StudyCondition cond;
    cond.axis = jc.at("axis").get<std::string>();
    cond.train = bias_spec_from_json(jc.at("train"));
    for (const auto& t : jc.at("tests"))
      cond.tests.push_back(bias_spec_from_json(t));
    if (jc.contains("variants"))
      cond.variants = jc["variants"].get<std::vector<std::string>>();
    c.conditions.push_back(std::move(cond));
  }
  return c;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open study config " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad study config JSON: " + std::string(e.what()));
  }
  return study_config_from_json(j);
}

}  // namespace dp

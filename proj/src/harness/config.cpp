#include "depthprompt/harness/config.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>

namespace dp {
namespace {

const char* pattern_name(SamplePattern p) {
  switch (p) {
    case SamplePattern::kRandom: return "random";
    case SamplePattern::kGrid: return "grid";
    case SamplePattern::kLine: return "line";
  }
  return "random";
}

SamplePattern pattern_from_name(const std::string& s) {
  if (s == "random") return SamplePattern::kRandom;
  if (s == "grid") return SamplePattern::kGrid;
  if (s == "line") return SamplePattern::kLine;
  throw ConfigError("unknown sample pattern: " + s);
}

nlohmann::json window_to_json(double lo, double hi) {
  nlohmann::json j = nlohmann::json::array();
  j.push_back(lo);
  if (std::isfinite(hi))
    j.push_back(hi);
  else
    j.push_back(nullptr);
  return j;
}

void window_from_json(const nlohmann::json& j, double* lo, double* hi) {
  *lo = j.at(0).get<double>();
  *hi = j.at(1).is_null() ? std::numeric_limits<double>::infinity()
                          : j.at(1).get<double>();
}

}  // namespace

nlohmann::json to_json(const BiasSpec& s) {
  nlohmann::json j;
  j["pattern"] = pattern_name(s.pattern);
  j["sample_count"] = s.sample_count;
  j["count_min"] = s.count_min;
  j["grid_stride"] = s.grid_stride;
  j["grid_phase"] = {s.grid_phase.first, s.grid_phase.second};
  j["line_count"] = s.line_count;
  j["line_band"] = {s.line_band.first, s.line_band.second};
  j["range_window"] = window_to_json(s.range_min, s.range_max);
  j["rng_seed"] = s.rng_seed;
  return j;
}

BiasSpec bias_spec_from_json(const nlohmann::json& j) {
  BiasSpec s;
  s.pattern = pattern_from_name(j.value("pattern", "random"));
  s.sample_count = j.value("sample_count", s.sample_count);
  s.count_min = j.value("count_min", s.count_min);
  s.grid_stride = j.value("grid_stride", s.grid_stride);
  if (j.contains("grid_phase"))
    s.grid_phase = {j["grid_phase"].at(0).get<int>(),
                    j["grid_phase"].at(1).get<int>()};
  s.line_count = j.value("line_count", s.line_count);
  if (j.contains("line_band"))
    s.line_band = {j["line_band"].at(0).get<double>(),
                   j["line_band"].at(1).get<double>()};
  if (j.contains("range_window"))
    window_from_json(j["range_window"], &s.range_min, &s.range_max);
  s.rng_seed = j.value("rng_seed", s.rng_seed);
  return s;
}

nlohmann::json to_json(const SceneSpec& s) {
  nlohmann::json j;
  j["height"] = s.height;
  j["width"] = s.width;
  j["n_planes"] = s.n_planes;
  j["depth_range"] = {s.min_depth, s.max_depth};
  j["max_slope"] = s.max_slope;
  j["noise_amp"] = s.noise_amp;
  j["rng_seed"] = s.rng_seed;
  return j;
}

SceneSpec scene_spec_from_json(const nlohmann::json& j) {
  SceneSpec s;
  s.height = j.value("height", s.height);
  s.width = j.value("width", s.width);
  s.n_planes = j.value("n_planes", s.n_planes);
  if (j.contains("depth_range")) {
    s.min_depth = j["depth_range"].at(0).get<double>();
    s.max_depth = j["depth_range"].at(1).get<double>();
  }
  s.max_slope = j.value("max_slope", s.max_slope);
  s.noise_amp = j.value("noise_amp", s.noise_amp);
  s.rng_seed = j.value("rng_seed", s.rng_seed);
  return s;
}

nlohmann::json to_json(const ModelConfig& m) {
  nlohmann::json j;
  j["foundation_channels"] = m.foundation_channels;
  j["prompt_channels"] = m.prompt_channels;
  j["decoder_channels"] = m.decoder_channels;
  j["stencil"] = m.stencil;
  j["use_prompt"] = m.use_prompt;
  j["use_ls"] = m.use_ls;
  j["use_spn"] = m.use_spn;
  j["depth_floor"] = m.depth_floor;
  j["lrelu_slope"] = m.lrelu_slope;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig m;
  auto arr = [&](const char* key, std::array<int, 4>& out) {
    if (j.contains(key))
      for (int i = 0; i < 4; ++i) out[i] = j[key].at(i).get<int>();
  };
  arr("foundation_channels", m.foundation_channels);
  arr("prompt_channels", m.prompt_channels);
  arr("decoder_channels", m.decoder_channels);
  m.stencil = j.value("stencil", m.stencil);
  m.use_prompt = j.value("use_prompt", m.use_prompt);
  m.use_ls = j.value("use_ls", m.use_ls);
  m.use_spn = j.value("use_spn", m.use_spn);
  m.depth_floor = j.value("depth_floor", m.depth_floor);
  m.lrelu_slope = j.value("lrelu_slope", m.lrelu_slope);
  if (m.stencil < 3 || m.stencil % 2 == 0)
    throw ConfigError("model.stencil must be odd and >= 3");
  return m;
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["corpus"] = c.corpus.string();
  j["stage"] = c.stage;
  j["split"] = {{"seed", c.split.seed},
                {"n_train", c.split.n_train},
                {"n_val", c.split.n_val},
                {"n_test", c.split.n_test}};
  j["train_bias"] = to_json(c.train_bias);
  j["test_bias"] = to_json(c.test_bias);
  j["propagation"] = {{"n_steps", c.propagation.n_steps},
                      {"seed_reinjection", c.propagation.seed_reinjection},
                      {"boundary", "clamp"}};
  j["loss"] = {{"lambda_si", c.loss.lambda_si}, {"mu", c.loss.mu}};
  j["optimizer"] = {{"learning_rate", c.optimizer.learning_rate},
                    {"decay_factors", c.optimizer.decay_factors},
                    {"decay_milestones", c.optimizer.decay_milestones},
                    {"batch_size", c.optimizer.batch_size}};
  j["epochs"] = c.epochs;
  j["rda_enabled"] = c.rda_enabled;
  nlohmann::json fam = nlohmann::json::array();
  for (const auto& f : c.rda_family) fam.push_back(to_json(f));
  j["rda_family"] = std::move(fam);
  j["model"] = to_json(c.model);
  j["foundation_checkpoint"] = c.foundation_checkpoint.string();
  j["checkpoint_out"] = c.checkpoint_out.string();
  j["eval_min_depth"] = c.eval_min_depth;
  j["seed"] = c.seed;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.corpus = j.value("corpus", std::string());
  c.stage = j.value("stage", c.stage);
  if (c.stage != "prompt" && c.stage != "foundation")
    throw ConfigError("stage must be 'prompt' or 'foundation'");
  if (j.contains("split")) {
    const auto& s = j["split"];
    c.split.seed = s.value("seed", c.split.seed);
    c.split.n_train = s.value("n_train", c.split.n_train);
    c.split.n_val = s.value("n_val", c.split.n_val);
    c.split.n_test = s.value("n_test", c.split.n_test);
  }
  if (j.contains("train_bias")) c.train_bias = bias_spec_from_json(j["train_bias"]);
  if (j.contains("test_bias")) c.test_bias = bias_spec_from_json(j["test_bias"]);
  if (j.contains("propagation")) {
    const auto& p = j["propagation"];
    c.propagation.n_steps = p.value("n_steps", c.propagation.n_steps);
    c.propagation.seed_reinjection =
        p.value("seed_reinjection", c.propagation.seed_reinjection);
    const std::string boundary = p.value("boundary", "clamp");
    if (boundary != "clamp")
      throw ConfigError("propagation.boundary: only 'clamp' is supported");
  }
  if (j.contains("loss")) {
    c.loss.lambda_si = j["loss"].value("lambda_si", c.loss.lambda_si);
    c.loss.mu = j["loss"].value("mu", c.loss.mu);
    if (c.loss.lambda_si < 0.0 || c.loss.lambda_si > 1.0 || c.loss.mu < 0.0)
      throw ConfigError("loss: lambda_si in [0,1], mu >= 0 required");
  }
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    c.optimizer.learning_rate = o.value("learning_rate", c.optimizer.learning_rate);
    if (o.contains("decay_factors"))
      c.optimizer.decay_factors = o["decay_factors"].get<std::vector<double>>();
    if (o.contains("decay_milestones"))
      c.optimizer.decay_milestones =
          o["decay_milestones"].get<std::vector<double>>();
    c.optimizer.batch_size = o.value("batch_size", c.optimizer.batch_size);
    if (c.optimizer.learning_rate <= 0.0)
      throw ConfigError("optimizer.learning_rate must be positive");
  }
  c.epochs = j.value("epochs", c.epochs);
  c.rda_enabled = j.value("rda_enabled", c.rda_enabled);
  if (j.contains("rda_family"))
    for (const auto& f : j["rda_family"]) c.rda_family.push_back(bias_spec_from_json(f));
  if (j.contains("model")) c.model = model_config_from_json(j["model"]);
  c.foundation_checkpoint = j.value("foundation_checkpoint", std::string());
  c.checkpoint_out = j.value("checkpoint_out", std::string());
  c.eval_min_depth = j.value("eval_min_depth", c.eval_min_depth);
  c.seed = j.value("seed", c.seed);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad config JSON in " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

std::uint64_t config_hash(const nlohmann::json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string provenance_timestamp() {
  std::time_t t = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"))
    t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
  else
    t = std::time(nullptr);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace dp

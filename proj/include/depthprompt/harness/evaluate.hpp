#pragma once

#include <functional>

#include "depthprompt/harness/config.hpp"
#include "depthprompt/harness/corpus.hpp"
#include "depthprompt/metrics.hpp"

namespace dp {

using PredictFn = std::function<DepthMap(const Image&, const SparseDepth&)>;

struct EvalOptions {
  double min_depth = 1e-3;
  std::uint64_t sample_seed = 0xeba1;
};

// Runs predict over the given scenes under test_spec and pools pixel metrics.
// The evaluation window is [max(min_depth, spec range min), spec range max].
MetricReport evaluate_scenes(const PredictFn& predict, const Corpus& corpus,
                             const std::vector<int>& indices,
                             const BiasSpec& test_spec, const EvalOptions& opts);

// Loads a checkpoint (model config from its manifest), rebuilds the stack and
// evaluates cfg.test_bias over the test split of cfg.corpus.
MetricReport evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                 const RunConfig& cfg);

}  // namespace dp

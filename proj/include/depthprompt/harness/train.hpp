#pragma once

#include <filesystem>
#include <vector>

#include "depthprompt/harness/config.hpp"
#include "depthprompt/harness/corpus.hpp"

namespace dp {

struct TrainResult {
  std::filesystem::path checkpoint;
  double step0_loss = 0.0;           // mean loss of the first batch, pre-update
  std::vector<double> epoch_mean_loss;
};

// Trains either the foundation backbone (stage "foundation", SI loss, all
// parameters) or the prompt stack (stage "prompt": prompt module fully,
// foundation biases only) and writes a checkpoint per epoch plus a
// training-curve CSV next to it. Deterministic given the config seeds.
// Throws DivergenceError on a non-finite loss; the last epoch checkpoint
// stays on disk.
TrainResult train(const RunConfig& cfg);

// Per-sample sparse input used by both training and evaluation; RDA and the
// fixed path share the seed derivation so a degenerate RDA family reproduces
// the fixed sampler exactly.
SparseDepth draw_train_sample(const DepthMap& gt, const RunConfig& cfg,
                              std::uint64_t sample_seed);

}  // namespace dp

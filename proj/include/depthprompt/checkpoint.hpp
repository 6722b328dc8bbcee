#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "depthprompt/nn/tensor.hpp"

namespace dp {

// Checkpoint file: magic "DPCK", version byte, 3 reserved bytes, uint64 LE
// manifest length, manifest JSON (UTF-8), then a flat float32 LE blob.
// The manifest's "index" maps parameter name -> {offset, rows, cols} into
// the blob.
struct Checkpoint {
  nlohmann::json manifest;
  std::map<std::string, nn::Mat<float>> tensors;
};

void save_checkpoint(const std::filesystem::path& path,
                     nlohmann::json manifest,
                     const std::vector<nn::Param<float>*>& params);

Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies tensors into params by name; throws ConfigError when a parameter is
// missing or shaped differently.
void assign_params(const Checkpoint& ckpt,
                   const std::vector<nn::Param<float>*>& params);

}  // namespace dp

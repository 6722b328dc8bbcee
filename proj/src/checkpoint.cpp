#include "depthprompt/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "depthprompt/error.hpp"

namespace dp {
namespace {
constexpr char kMagic[4] = {'D', 'P', 'C', 'K'};
}

void save_checkpoint(const std::filesystem::path& path,
                     nlohmann::json manifest,
                     const std::vector<nn::Param<float>*>& params) {
  nlohmann::json index;
  nlohmann::json frozen = nlohmann::json::array();
  nlohmann::json trainable = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const nn::Param<float>* p : params) {
    if (p->name.empty()) throw ContractError("save_checkpoint: unnamed parameter");
    index[p->name] = {{"offset", offset},
                      {"rows", p->value.rows()},
                      {"cols", p->value.cols()}};
    (p->trainable ? trainable : frozen).push_back(p->name);
    offset += static_cast<std::uint64_t>(p->value.size());
  }
  manifest["schema_version"] = 1;
  manifest["index"] = std::move(index);
  manifest["float_count"] = offset;
  manifest["partition"] = {{"frozen", std::move(frozen)},
                           {"trainable", std::move(trainable)}};

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("save_checkpoint: cannot open " + path.string());
  const std::string text = manifest.dump();
  os.write(kMagic, 4);
  const char version = 1;
  os.write(&version, 1);
  const char zeros[3] = {0, 0, 0};
  os.write(zeros, 3);
  const std::uint64_t len = text.size();
  os.write(reinterpret_cast<const char*>(&len), 8);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const nn::Param<float>* p : params)
    os.write(reinterpret_cast<const char*>(p->value.data()),
             static_cast<std::streamsize>(p->value.size() * sizeof(float)));
  if (!os) throw IoError("save_checkpoint: short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_checkpoint: cannot open " + path.string());
  char magic[4] = {};
  char version = 0;
  char reserved[3] = {};
  std::uint64_t len = 0;
  is.read(magic, 4);
  is.read(&version, 1);
  is.read(reserved, 3);
  is.read(reinterpret_cast<char*>(&len), 8);
  if (!is || std::memcmp(magic, kMagic, 4) != 0 || version != 1)
    throw FormatError("load_checkpoint: bad header in " + path.string());

  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw FormatError("load_checkpoint: truncated manifest in " + path.string());

  Checkpoint ckpt;
  ckpt.manifest = nlohmann::json::parse(text);
  const std::uint64_t n_floats = ckpt.manifest.at("float_count").get<std::uint64_t>();
  std::vector<float> blob(n_floats);
  is.read(reinterpret_cast<char*>(blob.data()),
          static_cast<std::streamsize>(n_floats * sizeof(float)));
  if (!is) throw FormatError("load_checkpoint: truncated blob in " + path.string());

  for (const auto& [name, entry] : ckpt.manifest.at("index").items()) {
    const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
    const long rows = entry.at("rows").get<long>();
    const long cols = entry.at("cols").get<long>();
    if (offset + static_cast<std::uint64_t>(rows) * cols > n_floats)
      throw FormatError("load_checkpoint: index entry out of range: " + name);
    nn::Mat<float> m(rows, cols);
    std::memcpy(m.data(), blob.data() + offset,
                static_cast<std::size_t>(rows) * cols * sizeof(float));
    ckpt.tensors.emplace(name, std::move(m));
  }
  return ckpt;
}

void assign_params(const Checkpoint& ckpt,
                   const std::vector<nn::Param<float>*>& params) {
  for (nn::Param<float>* p : params) {
    auto it = ckpt.tensors.find(p->name);
    if (it == ckpt.tensors.end())
      throw ConfigError("checkpoint is missing parameter " + p->name);
    if (it->second.rows() != p->value.rows() ||
        it->second.cols() != p->value.cols())
      throw ConfigError("checkpoint shape mismatch for " + p->name);
    p->value = it->second;
  }
}

}  // namespace dp

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tas/model.hpp"

namespace tas::checkpoint {

inline constexpr std::uint32_t kVersion = 1;

struct Checkpoint {
  model::ModelConfig config;
  std::vector<std::string> class_names;
  nn::ParameterSet params;
};

// Layout (little-endian): "TASCKPT\0", u32 version, u32 + bytes of the model
// config as key=value text, u32 class count then u32 + bytes per name, u32
// tensor count then per tensor u32 + name bytes, u32 rows, u32 cols and
// rows*cols float64 row-major.
std::string serialize(const model::Model& m, const std::vector<std::string>& class_names);
Checkpoint deserialize(const std::string& bytes);

void save(const std::filesystem::path& path, const model::Model& m, const std::vector<std::string>& class_names);
Checkpoint load(const std::filesystem::path& path);

}  // namespace tas::checkpoint

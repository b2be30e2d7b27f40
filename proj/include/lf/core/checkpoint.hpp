#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "lf/core/param_store.hpp"

namespace lf::core {

// Binary archive of (name, shape, little-endian float64 values) entries
// written to `path`, with a JSON manifest next to it at `path` + ".json".
// The manifest always carries the step counter; callers add what else they need.
void save_checkpoint(const ParamStore& store, const std::filesystem::path& path,
                     nlohmann::json manifest = nlohmann::json::object());

struct Checkpoint {
  ParamStore store;
  nlohmann::json manifest;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Parameter values only, byte for byte.
bool same_parameters(const ParamStore& a, const ParamStore& b);

}  // namespace lf::core

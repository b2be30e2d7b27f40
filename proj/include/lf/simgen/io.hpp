#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lf/simgen/world.hpp"

namespace lf::simgen {

// Directory layout: manifest.json, hierarchy.json and one JSON Lines file each
// for panels, products, users and samples.
void export_dataset(const World& world, const std::filesystem::path& dir);

struct Imported {
  World world;
  std::vector<std::string> warnings;  // integrity findings; empty when the manifest matches the data
};
// Malformed or missing lines raise ParseError naming file and line.
Imported import_dataset(const std::filesystem::path& dir);

// Hash over the manifest seed and the world contents.
std::string integrity_hash(std::uint64_t seed, const World& world);

}  // namespace lf::simgen

#pragma once

#include <filesystem>
#include <string>

#include "trustmon/data/dataset.hpp"

namespace trustmon::data {

/// A prepared benchmark: the three splits plus where they came from.
struct Benchmark {
  std::string name;
  Splits splits;
  PrepRecipe recipe;
  SplitSpec split_spec;
  bool pre_split = false;
};

/// Loads a benchmark manifest.
///
/// Either {"csv": "<file>"} with an optional recipe and split spec, applied as
/// prepare() then split(), or {"csv": {"train":..,"val":..,"test":..}} for
/// pre-split files that are loaded verbatim. Relative paths resolve against
/// the manifest's directory. Unknown keys are rejected.
Benchmark load_manifest(const std::filesystem::path& path);

}  // namespace trustmon::data

#include "trustmon/data/manifest.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "trustmon/error.hpp"

namespace trustmon::data {

using nlohmann::json;

namespace {

void check_keys(const json& object, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!object.is_object()) throw ManifestError(where + " must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) throw ManifestError("unknown key '" + key + "' in " + where);
  }
}

std::vector<std::string> string_list(const json& object, const char* key) {
  if (!object.contains(key)) return {};
  try {
    return object.at(key).get<std::vector<std::string>>();
  } catch (const json::exception&) {
    throw ManifestError(std::string("recipe '") + key + "' must be a list of strings");
  }
}

PrepRecipe parse_recipe(const json& spec, const std::string& label_column) {
  PrepRecipe recipe;
  recipe.label_column = label_column;
  if (spec.is_null()) return recipe;
  check_keys(spec,
             {"scale", "feature_columns", "ordinal_columns", "one_hot_columns",
              "drop_columns", "balance_classes", "seed", "label_threshold"},
             "recipe");
  try {
    const std::string scale = spec.value("scale", std::string("none"));
    if (scale == "minmax") {
      recipe.scale = Scaling::kMinMax;
    } else if (scale != "none") {
      throw ManifestError("recipe scale must be 'none' or 'minmax'");
    }
    recipe.feature_columns = string_list(spec, "feature_columns");
    recipe.ordinal_columns = string_list(spec, "ordinal_columns");
    recipe.one_hot_columns = string_list(spec, "one_hot_columns");
    recipe.drop_columns = string_list(spec, "drop_columns");
    recipe.balance_classes = spec.value("balance_classes", false);
    recipe.seed = spec.value("seed", std::uint64_t{10});
    if (spec.contains("label_threshold")) {
      const json& t = spec.at("label_threshold");
      if (t.is_string() && t.get<std::string>() == "median") {
        recipe.label_threshold_median = true;
      } else if (t.is_number()) {
        recipe.label_threshold = t.get<double>();
      } else {
        throw ManifestError("label_threshold must be a number or \"median\"");
      }
    }
  } catch (const json::exception& e) {
    throw ManifestError(std::string("bad recipe: ") + e.what());
  }
  return recipe;
}

SplitSpec parse_split(const json& spec) {
  SplitSpec out;
  if (spec.is_null()) return out;
  check_keys(spec, {"train", "val", "test", "seed"}, "split");
  try {
    out.train_frac = spec.value("train", out.train_frac);
    out.val_frac = spec.value("val", out.val_frac);
    out.test_frac = spec.value("test", out.test_frac);
    out.seed = spec.value("seed", out.seed);
  } catch (const json::exception& e) {
    throw ManifestError(std::string("bad split: ") + e.what());
  }
  return out;
}

}  // namespace

Benchmark load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
  check_keys(doc, {"name", "description", "csv", "label_column", "recipe", "split"},
             "manifest");
  if (!doc.contains("csv") || !doc.contains("label_column") ||
      !doc.at("label_column").is_string()) {
    throw ManifestError("manifest needs 'csv' and a string 'label_column'");
  }

  const auto base = path.parent_path();
  Benchmark bench;
  bench.name = doc.value("name", path.stem().string());
  const std::string label_column = doc.at("label_column").get<std::string>();
  const json& csv = doc.at("csv");

  if (csv.is_string()) {
    bench.recipe = parse_recipe(doc.value("recipe", json()), label_column);
    bench.split_spec = parse_split(doc.value("split", json()));
    const Dataset all = prepare(base / csv.get<std::string>(), bench.recipe);
    bench.splits = split(all, bench.split_spec);
    return bench;
  }

  check_keys(csv, {"train", "val", "test"}, "csv");
  if (!csv.contains("train") || !csv.contains("val") || !csv.contains("test")) {
    throw ManifestError("pre-split manifests must list train, val and test files");
  }
  if (doc.contains("recipe") || doc.contains("split")) {
    throw ManifestError("recipe and split only apply to a single csv");
  }
  bench.pre_split = true;
  bench.recipe.label_column = label_column;

  // Parse the three files as one table so categorical labels share codes.
  CsvTable combined;
  std::size_t bounds[3];
  const char* parts[] = {"train", "val", "test"};
  for (int i = 0; i < 3; ++i) {
    CsvTable table = read_csv(base / csv.at(parts[i]).get<std::string>());
    if (i == 0) {
      combined.header = table.header;
    } else if (table.header != combined.header) {
      throw ManifestError(std::string(parts[i]) + " file header differs from train");
    }
    for (auto& row : table.rows) combined.rows.push_back(std::move(row));
    bounds[i] = combined.rows.size();
  }
  const Dataset all = prepare(combined, bench.recipe);
  auto range = [](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> idx;
    for (std::size_t i = lo; i < hi; ++i) idx.push_back(i);
    return idx;
  };
  bench.splits.train = all.subset(range(0, bounds[0]));
  bench.splits.val = all.subset(range(bounds[0], bounds[1]));
  bench.splits.test = all.subset(range(bounds[1], bounds[2]));
  return bench;
}

}  // namespace trustmon::data

#include "trustmon/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "trustmon/data/random.hpp"
#include "trustmon/error.hpp"

namespace trustmon::data {

namespace {

bool contains(const std::vector<std::string>& list, const std::string& value) {
  return std::find(list.begin(), list.end(), value) != list.end();
}

// Categorical cells are matched verbatim; empty cells form their own "NA" value.
std::string category_of(const std::string& cell) { return cell.empty() ? "NA" : cell; }

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

struct LabelColumn {
  std::vector<int> labels;
  std::size_t class_count = 0;
};

LabelColumn parse_labels(const CsvTable& raw, std::size_t column, const PrepRecipe& recipe) {
  LabelColumn out;
  const std::size_t n = raw.rows.size();
  out.labels.resize(n);

  if (recipe.label_threshold || recipe.label_threshold_median) {
    std::vector<double> values(n);
    for (std::size_t r = 0; r < n; ++r) {
      auto v = parse_number(raw.rows[r][column]);
      if (!v) {
        throw NonNumericValue("label '" + raw.rows[r][column] + "' in row " +
                              std::to_string(r) + " cannot be thresholded");
      }
      values[r] = *v;
    }
    const double threshold =
        recipe.label_threshold_median ? median(values) : *recipe.label_threshold;
    for (std::size_t r = 0; r < n; ++r) out.labels[r] = values[r] >= threshold ? 1 : 0;
    out.class_count = 2;
    return out;
  }

  bool integral = true;
  int max_label = -1;
  for (std::size_t r = 0; r < n && integral; ++r) {
    auto v = parse_number(raw.rows[r][column]);
    if (!v || *v < 0 || *v != std::floor(*v) || *v > 1e6) {
      integral = false;
      break;
    }
    out.labels[r] = static_cast<int>(*v);
    max_label = std::max(max_label, out.labels[r]);
  }
  if (integral) {
    out.class_count = static_cast<std::size_t>(std::max(max_label + 1, 1));
    return out;
  }

  std::set<std::string> distinct;
  for (const auto& row : raw.rows) distinct.insert(row[column]);
  std::map<std::string, int> code;
  for (const auto& value : distinct) code.emplace(value, static_cast<int>(code.size()));
  for (std::size_t r = 0; r < n; ++r) out.labels[r] = code.at(raw.rows[r][column]);
  out.class_count = distinct.size();
  return out;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels.at(rows[i]));
  }
  out.feature_names = feature_names;
  out.class_count = class_count;
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_count, 0);
  for (int label : labels) ++counts.at(static_cast<std::size_t>(label));
  return counts;
}

MinMaxScaler MinMaxScaler::fit(const Eigen::MatrixXd& data) {
  MinMaxScaler scaler;
  if (data.rows() == 0) {
    scaler.min_ = Eigen::VectorXd::Zero(data.cols());
    scaler.range_ = Eigen::VectorXd::Zero(data.cols());
    return scaler;
  }
  scaler.min_ = data.colwise().minCoeff().transpose();
  scaler.range_ = data.colwise().maxCoeff().transpose() - scaler.min_;
  return scaler;
}

Eigen::MatrixXd MinMaxScaler::transform(const Eigen::MatrixXd& data) const {
  Eigen::MatrixXd out(data.rows(), data.cols());
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    if (range_(c) > 0) {
      out.col(c) = (data.col(c).array() - min_(c)) / range_(c);
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

Eigen::MatrixXd MinMaxScaler::inverse_transform(const Eigen::MatrixXd& scaled) const {
  Eigen::MatrixXd out(scaled.rows(), scaled.cols());
  for (Eigen::Index c = 0; c < scaled.cols(); ++c) {
    out.col(c) = scaled.col(c).array() * range_(c) + min_(c);
  }
  return out;
}

std::vector<std::size_t> balanced_rows(std::span<const int> labels,
                                       std::size_t class_count, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(class_count);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    by_class.at(static_cast<std::size_t>(labels[r])).push_back(r);
  }
  std::size_t keep = labels.size();
  for (std::size_t c = 0; c < class_count; ++c) {
    if (by_class[c].empty()) {
      throw EmptyClass("class " + std::to_string(c) + " has no rows to balance against");
    }
    keep = std::min(keep, by_class[c].size());
  }
  SeededRng rng(seed);
  std::vector<std::size_t> kept;
  kept.reserve(keep * class_count);
  for (auto& rows : by_class) {
    fisher_yates(rows, rng);
    kept.insert(kept.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

Dataset prepare(const CsvTable& raw, const PrepRecipe& recipe) {
  if (recipe.label_column.empty()) throw ManifestError("recipe has no label column");
  const std::size_t label_col = raw.column(recipe.label_column);
  for (const auto* list : {&recipe.feature_columns, &recipe.ordinal_columns,
                           &recipe.one_hot_columns}) {
    for (const auto& name : *list) raw.column(name);
  }

  std::vector<std::size_t> source_columns;
  if (!recipe.feature_columns.empty()) {
    for (const auto& name : recipe.feature_columns) source_columns.push_back(raw.column(name));
  } else {
    for (std::size_t c = 0; c < raw.header.size(); ++c) {
      if (c != label_col) source_columns.push_back(c);
    }
  }

  const std::size_t n = raw.rows.size();
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::set<std::string> matched_drops;

  for (std::size_t c : source_columns) {
    const std::string& name = raw.header[c];
    if (contains(recipe.drop_columns, name)) {
      matched_drops.insert(name);
      continue;
    }
    if (contains(recipe.one_hot_columns, name)) continue;

    std::vector<double> values(n);
    if (contains(recipe.ordinal_columns, name)) {
      std::set<std::string> distinct;
      for (const auto& row : raw.rows) distinct.insert(category_of(row[c]));
      std::map<std::string, double> rank;
      for (const auto& v : distinct) rank.emplace(v, static_cast<double>(rank.size()));
      for (std::size_t r = 0; r < n; ++r) values[r] = rank.at(category_of(raw.rows[r][c]));
    } else {
      for (std::size_t r = 0; r < n; ++r) {
        auto v = parse_number(raw.rows[r][c]);
        if (!v) {
          throw NonNumericValue("column '" + name + "' row " + std::to_string(r) +
                                " holds '" + raw.rows[r][c] + "'");
        }
        values[r] = *v;
      }
    }
    names.push_back(name);
    columns.push_back(std::move(values));
  }

  for (const auto& name : recipe.one_hot_columns) {
    const std::size_t c = raw.column(name);
    if (contains(recipe.drop_columns, name)) {
      matched_drops.insert(name);
      continue;
    }
    std::set<std::string> distinct;
    for (const auto& row : raw.rows) distinct.insert(category_of(row[c]));
    for (const auto& value : distinct) {
      std::string dummy = name + "_" + value;
      if (contains(recipe.drop_columns, dummy)) {
        matched_drops.insert(dummy);
        continue;
      }
      std::vector<double> values(n);
      for (std::size_t r = 0; r < n; ++r) {
        values[r] = category_of(raw.rows[r][c]) == value ? 1.0 : 0.0;
      }
      names.push_back(std::move(dummy));
      columns.push_back(std::move(values));
    }
  }

  for (const auto& drop : recipe.drop_columns) {
    if (!matched_drops.contains(drop)) {
      throw MissingColumn("drop column '" + drop + "' matches no raw or encoded column");
    }
  }

  LabelColumn labels = parse_labels(raw, label_col, recipe);

  Dataset ds;
  ds.feature_names = std::move(names);
  ds.class_count = labels.class_count;
  ds.labels = std::move(labels.labels);
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = columns[c][r];
    }
  }

  if (recipe.balance_classes) {
    const auto keep = balanced_rows(ds.labels, ds.class_count, recipe.seed);
    ds = ds.subset(keep);
  }
  if (recipe.scale == Scaling::kMinMax) {
    ds.features = MinMaxScaler::fit(ds.features).transform(ds.features);
  }
  return ds;
}

Dataset prepare(const std::filesystem::path& raw_csv, const PrepRecipe& recipe) {
  return prepare(read_csv(raw_csv), recipe);
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  if (n < 10) throw TooFewRows("need at least 10 rows to split, got " + std::to_string(n));
  const double total = spec.train_frac + spec.val_frac + spec.test_frac;
  if (spec.train_frac < 0 || spec.val_frac < 0 || spec.test_frac < 0 ||
      std::abs(total - 1.0) > 1e-9) {
    throw ManifestError("split fractions must be non-negative and sum to 1");
  }
  auto cut = [n](double frac) {
    return static_cast<std::size_t>(std::ceil(static_cast<double>(n) * frac - 1e-9));
  };
  const std::size_t n_val = cut(spec.val_frac);
  const std::size_t n_test = cut(spec.test_frac);
  if (n_val + n_test > n) throw TooFewRows("split leaves no training rows");
  const std::size_t n_train = n - n_val - n_test;

  const auto order = shuffled_indices(n, spec.seed);
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                 order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return out;
}

Splits split(const Dataset& ds, const SplitSpec& spec) {
  const auto idx = split_indices(ds.size(), spec);
  return {ds.subset(idx.train), ds.subset(idx.val), ds.subset(idx.test)};
}

CsvTable to_csv(const Dataset& ds) {
  CsvTable table;
  table.header = ds.feature_names;
  table.header.push_back("label");
  table.rows.reserve(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    std::vector<std::string> row;
    row.reserve(table.header.size());
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) {
      row.push_back(format_number(ds.features(static_cast<Eigen::Index>(r), c)));
    }
    row.push_back(std::to_string(ds.labels[r]));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace trustmon::data

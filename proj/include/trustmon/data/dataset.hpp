#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trustmon/data/csv.hpp"

namespace trustmon::data {

/// Prepared tabular data: one row per instance, integer class labels.
struct Dataset {
  Eigen::MatrixXd features;  // n x d
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_count() const { return static_cast<std::size_t>(features.cols()); }
  Eigen::VectorXd row(std::size_t i) const { return features.row(static_cast<Eigen::Index>(i)).transpose(); }

  Dataset subset(std::span<const std::size_t> rows) const;
  std::vector<std::size_t> class_counts() const;
};

enum class Scaling { kNone, kMinMax };

/// Preprocessing applied to a raw CSV before splitting.
struct PrepRecipe {
  std::string label_column;
  Scaling scale = Scaling::kNone;
  /// When non-empty, only these raw columns become features (in this order).
  std::vector<std::string> feature_columns;
  /// Categorical columns replaced by the rank of their value among the
  /// sorted distinct values.
  std::vector<std::string> ordinal_columns;
  /// Categorical columns expanded into one 0/1 column per distinct value,
  /// named "<column>_<value>" and appended after the other features.
  std::vector<std::string> one_hot_columns;
  /// Raw or generated columns removed from the output.
  std::vector<std::string> drop_columns;
  bool balance_classes = false;
  std::uint64_t seed = 10;
  /// Binarizes a numeric label: 1 when value >= threshold.
  std::optional<double> label_threshold;
  /// Same, with the threshold set to the label median.
  bool label_threshold_median = false;
};

/// Per-feature affine map of the fitting data's range onto [0, 1].
class MinMaxScaler {
 public:
  static MinMaxScaler fit(const Eigen::MatrixXd& data);

  Eigen::MatrixXd transform(const Eigen::MatrixXd& data) const;
  Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& scaled) const;

  const Eigen::VectorXd& minimums() const { return min_; }
  const Eigen::VectorXd& ranges() const { return range_; }

 private:
  Eigen::VectorXd min_;
  Eigen::VectorXd range_;  // zero for constant columns
};

Dataset prepare(const CsvTable& raw, const PrepRecipe& recipe);
Dataset prepare(const std::filesystem::path& raw_csv, const PrepRecipe& recipe);

/// Downsamples every class to the size of the smallest one. Kept rows stay in
/// their original order.
std::vector<std::size_t> balanced_rows(std::span<const int> labels,
                                       std::size_t class_count, std::uint64_t seed);

struct SplitSpec {
  double train_frac = 0.8;
  double val_frac = 0.1;
  double test_frac = 0.1;
  std::uint64_t seed = 10;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Seeded shuffle of 0..n-1, cut into train/val/test. Validation and test
/// sizes are ceil(n * frac); train takes the rest.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);
Splits split(const Dataset& ds, const SplitSpec& spec);

/// Serializes a dataset as CSV with the label in a trailing "label" column.
CsvTable to_csv(const Dataset& ds);

}  // namespace trustmon::data

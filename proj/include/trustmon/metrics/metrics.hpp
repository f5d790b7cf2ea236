#pragma once

#include <cstdint>
#include <json.hpp>
#include <span>
#include <string>

#include "trustmon/verdict.hpp"

namespace trustmon::metrics {

/// Confusion counts with misclassification as the positive class: a true
/// positive is an alarm raised on an instance the model got wrong.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// How Uncertain notifications enter the confusion matrix.
enum class UncertainPolicy {
  kAlarm,    // counted as an Incorrect verdict (default)
  kAbstain,  // instance left out of the matrix
};

struct NotificationTotals {
  std::uint64_t correct = 0;
  std::uint64_t incorrect = 0;
  std::uint64_t uncertain = 0;
};

struct MetricsReport {
  double mcc = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  ConfusionMatrix counts;
  NotificationTotals notification_totals;
};

ConfusionMatrix build_confusion(std::span<const Verdict> notifications,
                                std::span<const int> model_predictions,
                                std::span<const int> actual_labels,
                                UncertainPolicy policy = UncertainPolicy::kAlarm);

NotificationTotals count_notifications(std::span<const Verdict> notifications);

/// MCC, TPR, FPR, precision and F1. A zero denominator yields 0 for the
/// affected metric. Throws EmptyMatrix for an all-zero matrix.
MetricsReport compute_metrics(const ConfusionMatrix& cm);

double matthews_correlation(const ConfusionMatrix& cm);

/// Half-up rounding to `decimals` places, applied to the magnitude.
double round_half_up(double value, int decimals);
/// A rate in [0, 1] as a percentage with two decimals, e.g. "46.10".
std::string format_percent(double rate);
/// Three decimals, e.g. "0.464".
std::string format_mcc(double mcc);

nlohmann::ordered_json to_json(const MetricsReport& report);
std::string render_table(const MetricsReport& report);

}  // namespace trustmon::metrics

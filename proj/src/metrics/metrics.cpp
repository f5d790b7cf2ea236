#include "trustmon/metrics/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "trustmon/error.hpp"

namespace trustmon::metrics {

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

std::string fixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, round_half_up(value, decimals));
  return buffer;
}

}  // namespace

ConfusionMatrix build_confusion(std::span<const Verdict> notifications,
                                std::span<const int> model_predictions,
                                std::span<const int> actual_labels,
                                UncertainPolicy policy) {
  if (notifications.size() != model_predictions.size() ||
      notifications.size() != actual_labels.size()) {
    throw LengthMismatch(std::to_string(notifications.size()) + " notifications, " +
                         std::to_string(model_predictions.size()) + " predictions, " +
                         std::to_string(actual_labels.size()) + " labels");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < notifications.size(); ++i) {
    if (notifications[i] == Verdict::kUncertain && policy == UncertainPolicy::kAbstain) {
      continue;
    }
    const bool misclassified = model_predictions[i] != actual_labels[i];
    const bool alarm = notifications[i] != Verdict::kCorrect;
    if (alarm && misclassified) {
      ++cm.tp;
    } else if (alarm) {
      ++cm.fp;
    } else if (misclassified) {
      ++cm.fn;
    } else {
      ++cm.tn;
    }
  }
  return cm;
}

NotificationTotals count_notifications(std::span<const Verdict> notifications) {
  NotificationTotals totals;
  for (Verdict v : notifications) {
    switch (v) {
      case Verdict::kCorrect:
        ++totals.correct;
        break;
      case Verdict::kIncorrect:
        ++totals.incorrect;
        break;
      case Verdict::kUncertain:
        ++totals.uncertain;
        break;
    }
  }
  return totals;
}

double matthews_correlation(const ConfusionMatrix& cm) {
  const double tp = static_cast<double>(cm.tp);
  const double fp = static_cast<double>(cm.fp);
  const double tn = static_cast<double>(cm.tn);
  const double fn = static_cast<double>(cm.fn);
  // Grouped so that swapping (tp, tn) and (fp, fn) performs the same
  // floating-point operations.
  const double predicted_marginals = (tp + fp) * (tn + fn);
  const double actual_marginals = (tp + fn) * (tn + fp);
  if (predicted_marginals == 0.0 || actual_marginals == 0.0) return 0.0;
  const double mcc = (tp * tn - fp * fn) / std::sqrt(predicted_marginals * actual_marginals);
  return std::fmax(-1.0, std::fmin(1.0, mcc));
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw EmptyMatrix("confusion matrix has no instances");
  MetricsReport report;
  report.counts = cm;
  const double tp = static_cast<double>(cm.tp);
  const double fp = static_cast<double>(cm.fp);
  const double tn = static_cast<double>(cm.tn);
  const double fn = static_cast<double>(cm.fn);
  report.tpr = ratio(tp, tp + fn);
  report.fpr = ratio(fp, fp + tn);
  report.precision = ratio(tp, tp + fp);
  report.f1 = ratio(2.0 * report.precision * report.tpr, report.precision + report.tpr);
  report.mcc = matthews_correlation(cm);
  return report;
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double magnitude = std::floor(std::fabs(value) * scale + 0.5 + 1e-9) / scale;
  return std::copysign(magnitude, value);
}

std::string format_percent(double rate) { return fixed(rate * 100.0, 2); }

std::string format_mcc(double mcc) { return fixed(mcc, 3); }

nlohmann::ordered_json to_json(const MetricsReport& report) {
  nlohmann::ordered_json doc;
  doc["counts"] = {{"tp", report.counts.tp},
                   {"fp", report.counts.fp},
                   {"tn", report.counts.tn},
                   {"fn", report.counts.fn}};
  doc["notifications"] = {{"correct", report.notification_totals.correct},
                          {"incorrect", report.notification_totals.incorrect},
                          {"uncertain", report.notification_totals.uncertain}};
  doc["metrics"] = {{"mcc", report.mcc},
                    {"tpr", report.tpr},
                    {"fpr", report.fpr},
                    {"precision", report.precision},
                    {"f1", report.f1}};
  doc["display"] = {{"mcc", format_mcc(report.mcc)},
                    {"tpr", format_percent(report.tpr) + "%"},
                    {"fpr", format_percent(report.fpr) + "%"},
                    {"precision", format_percent(report.precision) + "%"},
                    {"f1", format_percent(report.f1) + "%"}};
  return doc;
}

std::string render_table(const MetricsReport& report) {
  const auto& n = report.notification_totals;
  const auto& c = report.counts;
  char buffer[512];
  std::snprintf(buffer, sizeof(buffer),
                "%6s %6s %6s | %6s %6s %6s %6s | %8s %8s %8s %8s %7s\n"
                "%6llu %6llu %6llu | %6llu %6llu %6llu %6llu | %7s%% %7s%% %7s%% %7s%% %7s\n",
                "#C", "#I", "#U", "TP", "FP", "TN", "FN", "TPR", "FPR", "Prec.", "F1", "MCC",
                static_cast<unsigned long long>(n.correct),
                static_cast<unsigned long long>(n.incorrect),
                static_cast<unsigned long long>(n.uncertain),
                static_cast<unsigned long long>(c.tp), static_cast<unsigned long long>(c.fp),
                static_cast<unsigned long long>(c.tn), static_cast<unsigned long long>(c.fn),
                format_percent(report.tpr).c_str(), format_percent(report.fpr).c_str(),
                format_percent(report.precision).c_str(), format_percent(report.f1).c_str(),
                format_mcc(report.mcc).c_str());
  return buffer;
}

}  // namespace trustmon::metrics

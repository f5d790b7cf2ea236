#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trustmon/data/manifest.hpp"
#include "trustmon/metrics/metrics.hpp"
#include "trustmon/model/network.hpp"

namespace trustmon::harness {

inline constexpr std::string_view kArtifactsFile = "artifacts.json";
inline constexpr std::string_view kNotificationsFile = "notifications.csv";
inline constexpr std::string_view kPredictionsFile = "predictions.csv";
inline constexpr std::string_view kEfficiencyFile = "efficiency.csv";
inline constexpr std::string_view kInferSummaryFile = "infer_summary.json";

enum class Phase { kAnalyze, kInfer };

std::string_view to_string(Phase phase);
Phase parse_phase(std::string_view text);

struct RunConfig {
  std::string tool;
  std::filesystem::path benchmark;
  std::filesystem::path model;
  nlohmann::json tool_config = nlohmann::json::object();
  std::filesystem::path workdir;
};

/// Reads {"tool"?, "benchmark", "model", "tool_config"?} with paths relative
/// to the config file. `tool` from the command line fills in or must match
/// the file's. The tool config is validated here, before any work starts.
RunConfig load_run_config(const std::filesystem::path& path, std::optional<std::string> tool,
                          const std::filesystem::path& workdir);

struct EfficiencyRecord {
  std::string tool;
  Phase phase = Phase::kAnalyze;
  std::string dataset;
  double duration_s = 0.0;
  std::optional<double> peak_rss_mib;
};

/// Runs one phase under the profiler and appends its record to
/// efficiency.csv. Analyze writes artifacts.json; infer needs it and writes
/// notifications.csv and predictions.csv.
EfficiencyRecord execute(const RunConfig& config, Phase phase);

/// Recomputes the confusion matrix and metrics from the workdir files.
metrics::MetricsReport evaluate_effectiveness(
    const std::filesystem::path& workdir,
    metrics::UncertainPolicy policy = metrics::UncertainPolicy::kAlarm);

void append_efficiency(const std::filesystem::path& workdir, const EfficiencyRecord& record);
std::vector<EfficiencyRecord> read_efficiency(const std::filesystem::path& workdir);

struct EfficiencySummary {
  std::string tool;
  Phase phase = Phase::kAnalyze;
  std::string dataset;
  std::size_t runs = 0;
  double mean_duration_s = 0.0;
  std::optional<double> peak_rss_mib;  // largest over the runs
};

/// One row per (tool, phase, dataset), in first-seen order.
std::vector<EfficiencySummary> summarize_efficiency(const std::vector<EfficiencyRecord>& records);
std::vector<EfficiencySummary> evaluate_efficiency(const std::filesystem::path& workdir);
std::string render_efficiency(const std::vector<EfficiencySummary>& rows);

/// Dataset summary: name, features, split sizes and class balance.
std::string render_dataset_table(const data::Benchmark& benchmark);
/// Model summary: one row per layer plus the parameter total.
std::string render_model_table(const model::Network& net);

}  // namespace trustmon::harness

#include "trustmon/harness/harness.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "trustmon/data/csv.hpp"
#include "trustmon/error.hpp"
#include "trustmon/harness/notifications.hpp"
#include "trustmon/harness/profiler.hpp"
#include "trustmon/harness/tool_plugin.hpp"
#include "trustmon/json_util.hpp"

namespace trustmon::harness {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

fs::path require(const fs::path& workdir, std::string_view file) {
  fs::path path = workdir / file;
  if (!fs::exists(path)) {
    throw MissingOutputs(std::string(file) + " not found in " + workdir.string());
  }
  return path;
}

std::string fixed(double value, int decimals) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(decimals) << value;
  return out.str();
}

std::string render_rows(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c) out << "  ";
      const bool last = c + 1 == rows[r].size();
      out << std::left << std::setw(last ? 0 : static_cast<int>(widths[c])) << rows[r][c];
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : widths) total += w;
      out << std::string(total + 2 * (widths.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace

std::string_view to_string(Phase phase) { return phase == Phase::kAnalyze ? "analyze" : "infer"; }

Phase parse_phase(std::string_view text) {
  if (text == "analyze") return Phase::kAnalyze;
  if (text == "infer") return Phase::kInfer;
  throw ConfigError("unknown phase '" + std::string(text) + "'");
}

RunConfig load_run_config(const fs::path& path, std::optional<std::string> tool,
                          const fs::path& workdir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  check_config_keys(doc, {"tool", "benchmark", "model", "tool_config"}, "run config");
  const fs::path base = path.parent_path();

  RunConfig config;
  const auto file_tool = config_value<std::string>(doc, "tool", "", "run config");
  if (tool && !file_tool.empty() && *tool != file_tool) {
    throw ConfigError("run config is for '" + file_tool + "' but --tool is '" + *tool + "'");
  }
  config.tool = tool ? *tool : file_tool;
  if (config.tool.empty()) throw ConfigError("no tool given in the run config or on the command line");

  if (!doc.contains("benchmark") || !doc.contains("model")) {
    throw ConfigError("run config needs 'benchmark' and 'model'");
  }
  config.benchmark = base / config_value<std::string>(doc, "benchmark", "", "run config");
  config.model = base / config_value<std::string>(doc, "model", "", "run config");
  if (doc.contains("tool_config")) config.tool_config = doc["tool_config"];
  config.workdir = workdir;

  find_tool(config.tool).validate_config(config.tool_config);
  return config;
}

EfficiencyRecord execute(const RunConfig& config, Phase phase) {
  const ToolPlugin& tool = find_tool(config.tool);
  tool.validate_config(config.tool_config);
  std::error_code ec;
  fs::create_directories(config.workdir, ec);
  if (ec) throw IoError("cannot create " + config.workdir.string() + ": " + ec.message());

  const fs::path artifacts = config.workdir / kArtifactsFile;
  if (phase == Phase::kInfer && !fs::exists(artifacts)) {
    throw MissingOutputs(artifacts.string() + " does not exist; run the analyze phase first");
  }

  EfficiencyRecord record;
  record.tool = config.tool;
  record.phase = phase;
  const ProfileResult profile = profile_in_process([&] {
    const data::Benchmark benchmark = data::load_manifest(config.benchmark);
    const model::Network net = model::load_model(config.model);
    record.dataset = benchmark.name;
    if (phase == Phase::kAnalyze) {
      write_text(artifacts, tool.analyze(net, benchmark.splits, config.tool_config));
      return;
    }

    const std::string text = read_text(artifacts);
    try {
      const auto head = nlohmann::json::parse(text);
      const auto made_by = head.value("tool", std::string());
      if (made_by != config.tool) {
        throw ConfigError(artifacts.string() + " was produced by '" + made_by + "', not '" +
                          config.tool + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(artifacts.string() + ": " + e.what());
    }
    const data::Dataset& test = benchmark.splits.test;
    const InferOutput out = tool.infer(text, net, test);
    if (out.verdicts.size() != test.size()) {
      throw DimensionError("tool returned " + std::to_string(out.verdicts.size()) +
                           " verdicts for " + std::to_string(test.size()) + " test rows");
    }
    std::vector<PredictionRecord> predictions;
    predictions.reserve(test.size());
    for (std::size_t r = 0; r < test.size(); ++r) {
      const auto trace = model::forward_trace(net, test.row(r));
      predictions.push_back({static_cast<int>(trace.predicted_class), test.labels[r]});
    }
    write_notifications(config.workdir / kNotificationsFile, out.verdicts);
    write_predictions(config.workdir / kPredictionsFile, predictions);
    if (out.summary) write_text(config.workdir / kInferSummaryFile, out.summary->dump(2) + "\n");
  });
  record.duration_s = profile.duration_s;
  record.peak_rss_mib = profile.peak_rss_mib;
  append_efficiency(config.workdir, record);
  return record;
}

metrics::MetricsReport evaluate_effectiveness(const fs::path& workdir,
                                              metrics::UncertainPolicy policy) {
  const auto verdicts = read_notifications(require(workdir, kNotificationsFile));
  const auto records = read_predictions(require(workdir, kPredictionsFile));
  if (verdicts.size() != records.size()) {
    throw LengthMismatch(std::string(kNotificationsFile) + " has " +
                         std::to_string(verdicts.size()) + " rows but " +
                         std::string(kPredictionsFile) + " has " + std::to_string(records.size()));
  }
  std::vector<int> predicted;
  std::vector<int> actual;
  for (const auto& r : records) {
    predicted.push_back(r.predicted);
    actual.push_back(r.actual);
  }
  auto report = metrics::compute_metrics(metrics::build_confusion(verdicts, predicted, actual, policy));
  report.notification_totals = metrics::count_notifications(verdicts);
  return report;
}

void append_efficiency(const fs::path& workdir, const EfficiencyRecord& record) {
  const fs::path path = workdir / kEfficiencyFile;
  data::CsvTable table;
  if (fs::exists(path)) {
    table = data::read_csv(path);
  } else {
    table.header = {"tool", "phase", "dataset", "duration_s", "peak_rss_mib"};
  }
  table.rows.push_back({record.tool, std::string(to_string(record.phase)), record.dataset,
                        data::format_number(record.duration_s),
                        record.peak_rss_mib ? data::format_number(*record.peak_rss_mib) : ""});
  data::write_csv(path, table);
}

std::vector<EfficiencyRecord> read_efficiency(const fs::path& workdir) {
  const auto table = data::read_csv(require(workdir, kEfficiencyFile));
  const std::size_t tool = table.column("tool");
  const std::size_t phase = table.column("phase");
  const std::size_t dataset = table.column("dataset");
  const std::size_t duration = table.column("duration_s");
  const std::size_t peak = table.column("peak_rss_mib");
  std::vector<EfficiencyRecord> out;
  for (const auto& row : table.rows) {
    EfficiencyRecord r;
    r.tool = row[tool];
    r.phase = parse_phase(row[phase]);
    r.dataset = row[dataset];
    const auto d = data::parse_number(row[duration]);
    if (!d) throw ParseError(std::string(kEfficiencyFile) + ": bad duration '" + row[duration] + "'");
    r.duration_s = *d;
    r.peak_rss_mib = data::parse_number(row[peak]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EfficiencySummary> summarize_efficiency(const std::vector<EfficiencyRecord>& records) {
  std::vector<EfficiencySummary> rows;
  std::vector<double> totals;
  for (const auto& r : records) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const EfficiencySummary& s) {
      return s.tool == r.tool && s.phase == r.phase && s.dataset == r.dataset;
    });
    if (it == rows.end()) {
      rows.push_back({r.tool, r.phase, r.dataset, 0, 0.0, std::nullopt});
      totals.push_back(0.0);
      it = rows.end() - 1;
    }
    const auto k = static_cast<std::size_t>(it - rows.begin());
    ++it->runs;
    totals[k] += r.duration_s;
    if (r.peak_rss_mib) {
      it->peak_rss_mib = std::max(it->peak_rss_mib.value_or(0.0), *r.peak_rss_mib);
    }
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rows[k].mean_duration_s = totals[k] / static_cast<double>(rows[k].runs);
  }
  return rows;
}

std::vector<EfficiencySummary> evaluate_efficiency(const fs::path& workdir) {
  return summarize_efficiency(read_efficiency(workdir));
}

std::string render_efficiency(const std::vector<EfficiencySummary>& rows) {
  std::vector<std::vector<std::string>> table{
      {"tool", "phase", "dataset", "runs", "time (s)", "memory (MiB)"}};
  for (const auto& r : rows) {
    table.push_back({r.tool, std::string(to_string(r.phase)), r.dataset, std::to_string(r.runs),
                     fixed(r.mean_duration_s, 3),
                     r.peak_rss_mib ? fixed(*r.peak_rss_mib, 1) : "n/a"});
  }
  return render_rows(table);
}

std::string render_dataset_table(const data::Benchmark& benchmark) {
  const auto& s = benchmark.splits;
  std::vector<std::vector<std::string>> table{{"dataset", "features", "classes", "train", "val",
                                               "test", "train class counts"}};
  std::string counts;
  for (auto c : s.train.class_counts()) counts += (counts.empty() ? "" : "/") + std::to_string(c);
  table.push_back({benchmark.name, std::to_string(s.train.feature_count()),
                   std::to_string(s.train.class_count), std::to_string(s.train.size()),
                   std::to_string(s.val.size()), std::to_string(s.test.size()), counts});
  return render_rows(table);
}

std::string render_model_table(const model::Network& net) {
  std::vector<std::vector<std::string>> table{{"layer", "kind", "activation", "in", "out", "params"}};
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const auto& layer = net.layer(i);
    const std::size_t params =
        layer.is_dense() ? static_cast<std::size_t>(layer.weights.size() + layer.bias.size()) : 0;
    table.push_back({std::to_string(i), std::string(model::to_string(layer.kind)),
                     layer.is_dense() ? std::string(model::to_string(layer.activation)) : "-",
                     std::to_string(net.input_width(i)), std::to_string(net.output_width(i)),
                     std::to_string(params)});
  }
  table.push_back({"total", "", "", std::to_string(net.input_dim()),
                   std::to_string(net.output_dim()), std::to_string(net.parameter_count())});
  return render_rows(table);
}

}  // namespace trustmon::harness

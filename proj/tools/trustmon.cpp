// trustmon: analyze/infer misclassification detectors and evaluate them.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "trustmon/data/blobs.hpp"
#include "trustmon/data/manifest.hpp"
#include "trustmon/error.hpp"
#include "trustmon/harness/harness.hpp"
#include "trustmon/harness/profiler.hpp"
#include "trustmon/harness/tool_plugin.hpp"
#include "trustmon/metrics/metrics.hpp"
#include "trustmon/model/network.hpp"

namespace fs = std::filesystem;
using namespace trustmon;

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Runtime misclassification detectors for dense classifiers"};
  app.require_subcommand(1);

  std::vector<std::string> tools;
  for (auto name : harness::tool_names()) tools.emplace_back(name);

  auto* execute = app.add_subcommand("execute", "Run the analyze or infer phase of a detector");
  std::optional<std::string> tool;
  std::string phase;
  fs::path config_path;
  fs::path workdir;
  execute->add_option("--tool", tool, "Detector")->check(CLI::IsMember(tools));
  execute->add_option("--phase", phase, "analyze or infer")
      ->required()
      ->check(CLI::IsMember({"analyze", "infer"}));
  execute->add_option("--config", config_path, "Run config JSON")->required();
  execute->add_option("--workdir", workdir, "Directory for artifacts and outputs")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Compute metrics from a workdir");
  std::string kind;
  bool as_json = false;
  bool abstain = false;
  evaluate->add_option("--kind", kind, "effectiveness or efficiency")
      ->required()
      ->check(CLI::IsMember({"effectiveness", "efficiency"}));
  evaluate->add_option("--workdir", workdir, "Workdir written by execute")->required();
  evaluate->add_flag("--json", as_json, "Print the machine-readable report");
  evaluate->add_flag("--uncertain-abstain", abstain,
                     "Leave uncertain verdicts out of the confusion matrix");

  auto* detail = app.add_subcommand("detail", "Summarize a benchmark and optionally a model");
  fs::path manifest;
  std::optional<fs::path> model_path;
  detail->add_option("--benchmark", manifest, "Benchmark manifest")->required();
  detail->add_option("--model", model_path, "Model file");

  auto* prepare = app.add_subcommand("prepare", "Write the prepared train/val/test splits as CSV");
  fs::path out_dir;
  prepare->add_option("--benchmark", manifest, "Benchmark manifest")->required();
  prepare->add_option("--out", out_dir, "Output directory")->required();

  auto* blobs = app.add_subcommand("generate-blobs", "Write the synthetic two-blob dataset");
  data::BlobSpec spec;
  fs::path out_file;
  blobs->add_option("--out", out_file, "Output CSV")->required();
  blobs->add_option("--rows", spec.rows, "Row count")->capture_default_str();
  blobs->add_option("--dims", spec.dims, "Feature count")->capture_default_str();
  blobs->add_option("--separation", spec.separation, "Distance between centers")
      ->capture_default_str();
  blobs->add_option("--noise-rate", spec.noise_rate, "Share of flipped labels")
      ->capture_default_str();
  blobs->add_option("--noise-width", spec.noise_width, "Width of the flip band")
      ->capture_default_str();
  blobs->add_option("--seed", spec.seed, "Seed")->capture_default_str();

  auto* profile = app.add_subcommand("profile", "Run a command and report its time and peak RSS");
  std::vector<std::string> command;
  profile->add_option("command", command, "Command and arguments (after --)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorCategory::kConfig);
  }

  if (execute->parsed()) {
    const auto config = harness::load_run_config(config_path, tool, workdir);
    const auto record = harness::execute(config, harness::parse_phase(phase));
    std::cout << record.tool << ' ' << harness::to_string(record.phase) << " on "
              << record.dataset << ": " << record.duration_s << " s";
    if (record.peak_rss_mib) std::cout << ", peak " << *record.peak_rss_mib << " MiB";
    std::cout << '\n';
  } else if (evaluate->parsed()) {
    if (kind == "effectiveness") {
      const auto report = harness::evaluate_effectiveness(
          workdir, abstain ? metrics::UncertainPolicy::kAbstain : metrics::UncertainPolicy::kAlarm);
      std::cout << (as_json ? metrics::to_json(report).dump(2) + "\n"
                            : metrics::render_table(report));
    } else {
      const auto rows = harness::evaluate_efficiency(workdir);
      if (as_json) {
        auto doc = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
          doc.push_back({{"tool", r.tool},
                         {"phase", harness::to_string(r.phase)},
                         {"dataset", r.dataset},
                         {"runs", r.runs},
                         {"mean_duration_s", r.mean_duration_s},
                         {"peak_rss_mib", r.peak_rss_mib ? nlohmann::ordered_json(*r.peak_rss_mib)
                                                         : nlohmann::ordered_json(nullptr)}});
        }
        std::cout << doc.dump(2) << '\n';
      } else {
        std::cout << harness::render_efficiency(rows);
      }
    }
  } else if (detail->parsed()) {
    std::cout << harness::render_dataset_table(data::load_manifest(manifest));
    if (model_path) std::cout << '\n' << harness::render_model_table(model::load_model(*model_path));
  } else if (prepare->parsed()) {
    const auto benchmark = data::load_manifest(manifest);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    data::write_csv(out_dir / "train.csv", data::to_csv(benchmark.splits.train));
    data::write_csv(out_dir / "val.csv", data::to_csv(benchmark.splits.val));
    data::write_csv(out_dir / "test.csv", data::to_csv(benchmark.splits.test));
  } else if (blobs->parsed()) {
    data::write_csv(out_file, data::make_gaussian_blobs(spec));
  } else if (profile->parsed()) {
    const auto result = harness::profile_subprocess(command);
    std::cout << "duration_s " << result.profile.duration_s << '\n';
    std::cout << "peak_rss_mib ";
    if (result.profile.peak_rss_mib) {
      std::cout << *result.profile.peak_rss_mib << '\n';
    } else {
      std::cout << "n/a\n";
    }
    return result.exit_status;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error[" << category_name(e.category()) << "]: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error[" << category_name(ErrorCategory::kIo) << "]: " << e.what() << '\n';
    return exit_code(ErrorCategory::kIo);
  } catch (const std::exception& e) {
    std::cerr << "error[" << category_name(ErrorCategory::kDetector) << "]: " << e.what() << '\n';
    return exit_code(ErrorCategory::kDetector);
  }
}

#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "trustmon/verdict.hpp"

namespace trustmon::harness {

/// Notifications are stored as CSV with header `instance_index,verdict`, one
/// row per test instance. Reading accepts rows in any order but requires
/// every index 0..n-1 exactly once and returns verdicts by index.
void write_notifications(const std::filesystem::path& path, const std::vector<Verdict>& verdicts);
std::vector<Verdict> read_notifications(const std::filesystem::path& path);

struct PredictionRecord {
  int predicted = 0;
  int actual = 0;
};

/// Header `instance_index,predicted,actual`.
void write_predictions(const std::filesystem::path& path,
                       const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

}  // namespace trustmon::harness

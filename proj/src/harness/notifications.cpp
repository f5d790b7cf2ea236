#include "trustmon/harness/notifications.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "trustmon/data/csv.hpp"
#include "trustmon/error.hpp"

namespace trustmon::harness {

namespace {

std::size_t parse_index(const std::string& cell, std::size_t count, const std::string& file) {
  const auto value = data::parse_number(cell);
  if (!value || *value < 0 || *value != std::floor(*value) ||
      *value >= static_cast<double>(count)) {
    throw ParseError(file + ": bad instance_index '" + cell + "'");
  }
  return static_cast<std::size_t>(*value);
}

int parse_label(const std::string& cell, const std::string& file) {
  const auto value = data::parse_number(cell);
  if (!value || *value != std::floor(*value)) {
    throw ParseError(file + ": bad class label '" + cell + "'");
  }
  return static_cast<int>(*value);
}

// Rows re-ordered by their instance_index column; each index exactly once.
template <typename T, typename Parse>
std::vector<T> by_index(const data::CsvTable& table, const std::string& file, Parse parse) {
  const std::size_t n = table.rows.size();
  std::vector<std::optional<T>> slots(n);
  const std::size_t index_col = table.column("instance_index");
  for (const auto& row : table.rows) {
    const std::size_t i = parse_index(row[index_col], n, file);
    if (slots[i]) throw ParseError(file + ": instance_index " + std::to_string(i) + " repeats");
    slots[i] = parse(row);
  }
  std::vector<T> out;
  out.reserve(n);
  for (auto& slot : slots) out.push_back(*slot);
  return out;
}

}  // namespace

void write_notifications(const std::filesystem::path& path, const std::vector<Verdict>& verdicts) {
  data::CsvTable table;
  table.header = {"instance_index", "verdict"};
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    table.rows.push_back({std::to_string(i), std::string(to_string(verdicts[i]))});
  }
  data::write_csv(path, table);
}

std::vector<Verdict> read_notifications(const std::filesystem::path& path) {
  const auto table = data::read_csv(path);
  const auto file = path.filename().string();
  const std::size_t verdict_col = table.column("verdict");
  return by_index<Verdict>(table, file, [&](const std::vector<std::string>& row) {
    return parse_verdict(row[verdict_col]);
  });
}

void write_predictions(const std::filesystem::path& path,
                       const std::vector<PredictionRecord>& records) {
  data::CsvTable table;
  table.header = {"instance_index", "predicted", "actual"};
  for (std::size_t i = 0; i < records.size(); ++i) {
    table.rows.push_back({std::to_string(i), std::to_string(records[i].predicted),
                          std::to_string(records[i].actual)});
  }
  data::write_csv(path, table);
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  const auto table = data::read_csv(path);
  const auto file = path.filename().string();
  const std::size_t predicted_col = table.column("predicted");
  const std::size_t actual_col = table.column("actual");
  return by_index<PredictionRecord>(table, file, [&](const std::vector<std::string>& row) {
    return PredictionRecord{parse_label(row[predicted_col], file),
                            parse_label(row[actual_col], file)};
  });
}

}  // namespace trustmon::harness

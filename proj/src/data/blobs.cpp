#include "trustmon/data/blobs.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "trustmon/data/random.hpp"
#include "trustmon/error.hpp"

namespace trustmon::data {

CsvTable make_gaussian_blobs(const BlobSpec& spec) {
  if (spec.rows == 0 || spec.dims == 0) throw ConfigError("blob spec needs rows and dims");
  if (spec.noise_rate < 0 || spec.noise_rate > 0.5 || spec.noise_width <= 0) {
    throw ConfigError("noise_rate must lie in [0, 0.5] and noise_width be positive");
  }

  SeededRng rng(spec.seed);
  const double axis = 1.0 / std::sqrt(static_cast<double>(spec.dims));
  const double offset = spec.separation / 2.0 * axis;

  std::vector<std::vector<double>> points(spec.rows, std::vector<double>(spec.dims));
  std::vector<int> labels(spec.rows);
  std::vector<double> weight(spec.rows);
  double weight_sum = 0.0;
  for (std::size_t r = 0; r < spec.rows; ++r) {
    labels[r] = static_cast<int>(r % 2);
    const double sign = labels[r] == 1 ? 1.0 : -1.0;
    double margin = 0.0;
    for (std::size_t d = 0; d < spec.dims; ++d) {
      points[r][d] = sign * offset + rng.normal();
      margin += axis * points[r][d];
    }
    weight[r] = std::exp(-margin * margin / (2.0 * spec.noise_width * spec.noise_width));
    weight_sum += weight[r];
  }

  const double scale = spec.noise_rate * static_cast<double>(spec.rows) / weight_sum;
  for (std::size_t r = 0; r < spec.rows; ++r) {
    const double flip = std::min(1.0, scale * weight[r]);
    if (rng.uniform() < flip) labels[r] = 1 - labels[r];
  }

  CsvTable table;
  for (std::size_t d = 0; d < spec.dims; ++d) table.header.push_back("x" + std::to_string(d));
  table.header.push_back("label");
  table.rows.reserve(spec.rows);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    std::vector<std::string> row;
    for (double v : points[r]) row.push_back(format_number(v));
    row.push_back(std::to_string(labels[r]));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace trustmon::data

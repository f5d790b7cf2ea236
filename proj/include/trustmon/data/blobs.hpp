#pragma once

#include <cstddef>
#include <cstdint>

#include "trustmon/data/csv.hpp"

namespace trustmon::data {

/// Two isotropic unit-variance Gaussian blobs with boundary-concentrated
/// label noise.
///
/// Blob centers sit at +-separation/2 along the main diagonal. Each row keeps
/// its blob's label except with probability proportional to
/// exp(-m^2 / (2 * noise_width^2)), m being the signed distance to the
/// separating hyperplane; the proportionality constant makes the mean flip
/// probability over the generated rows equal noise_rate.
struct BlobSpec {
  std::size_t rows = 2000;
  std::size_t dims = 4;
  double separation = 4.0;
  double noise_rate = 0.15;
  double noise_width = 1.0;
  std::uint64_t seed = 10;
};

/// Columns x0..x{dims-1} and "label"; rows alternate between the two blobs.
CsvTable make_gaussian_blobs(const BlobSpec& spec);

}  // namespace trustmon::data

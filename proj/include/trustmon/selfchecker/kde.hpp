#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <vector>

namespace trustmon::selfchecker {

struct DensityOptions {
  /// Dimensions whose (population) training variance is at or below this are
  /// ignored.
  double var_threshold = 1e-5;
  /// Ridge, relative to the mean kernel variance, added when the plain kernel
  /// covariance cannot be factorized.
  double alpha = 0.01;
  /// Stronger ridge tried if `alpha` is still not enough.
  double covariance_alpha = 0.1;
};

/// Gaussian kernel density estimate with a full (Scott-scaled) bandwidth
/// matrix over the informative dimensions of the training activations.
struct DensityModel {
  std::size_t input_width = 0;
  std::vector<std::size_t> kept_dims;
  Eigen::MatrixXd samples;   // m x kept
  double bandwidth_factor = 0.0;
  Eigen::MatrixXd cholesky;  // lower factor of the kernel covariance
  double regularization = 0.0;  // ridge strength used; 0 when none was needed
  double log_norm_const = 0.0;

  std::size_t sample_count() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t dims() const { return kept_dims.size(); }

  /// Recomputes the cached whitened samples; call after filling the fields
  /// by hand (deserialization).
  void finalize();

  // samples * L^-T, i.e. each row whitened by the kernel covariance.
  Eigen::MatrixXd whitened;
};

/// Lower Cholesky factor, or nullopt when a pivot is not clearly positive
/// relative to the matrix's largest diagonal entry.
std::optional<Eigen::MatrixXd> cholesky_factor(const Eigen::MatrixXd& spd,
                                               double relative_tolerance = 1e-10);

/// Scott's rule factor m^(-1/(d+4)).
double scott_factor(std::size_t samples, std::size_t dims);

/// Fits a KDE to the rows of `samples`. Throws DegenerateData when fewer than
/// two rows are given or every dimension is screened out.
DensityModel fit_density(const Eigen::MatrixXd& samples, const DensityOptions& options = {});

/// log( (1/m) sum_i N(x; s_i, H) ) over the kept dimensions of x.
double estimate_log_density(const DensityModel& model, const Eigen::VectorXd& x);

}  // namespace trustmon::selfchecker

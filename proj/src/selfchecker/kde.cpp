#include "trustmon/selfchecker/kde.hpp"

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <numbers>

#include "trustmon/error.hpp"

namespace trustmon::selfchecker {

std::optional<Eigen::MatrixXd> cholesky_factor(const Eigen::MatrixXd& spd,
                                               double relative_tolerance) {
  const Eigen::Index n = spd.rows();
  if (n == 0 || spd.cols() != n) return std::nullopt;
  const double scale = spd.diagonal().cwiseAbs().maxCoeff();
  if (!(scale > 0) || !std::isfinite(scale)) return std::nullopt;

  Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = spd(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= lower(j, k) * lower(j, k);
    if (!(pivot > relative_tolerance * scale)) return std::nullopt;
    const double diag = std::sqrt(pivot);
    lower(j, j) = diag;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = spd(i, j);
      for (Eigen::Index k = 0; k < j; ++k) v -= lower(i, k) * lower(j, k);
      lower(i, j) = v / diag;
    }
  }
  return lower;
}

double scott_factor(std::size_t samples, std::size_t dims) {
  return std::pow(static_cast<double>(samples), -1.0 / (static_cast<double>(dims) + 4.0));
}

void DensityModel::finalize() {
  const Eigen::Index d = static_cast<Eigen::Index>(kept_dims.size());
  log_norm_const = -std::log(static_cast<double>(samples.rows())) -
                   0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
  for (Eigen::Index i = 0; i < d; ++i) log_norm_const -= std::log(cholesky(i, i));
  // Solve L * W^T = S^T, so row i of W is L^-1 s_i.
  whitened = cholesky.triangularView<Eigen::Lower>().solve(samples.transpose()).transpose();
}

DensityModel fit_density(const Eigen::MatrixXd& samples, const DensityOptions& options) {
  const Eigen::Index m = samples.rows();
  if (m < 2) {
    throw DegenerateData("need at least 2 samples, got " + std::to_string(m));
  }

  DensityModel model;
  model.input_width = static_cast<std::size_t>(samples.cols());
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    const double variance =
        (samples.col(c).array() - mean(c)).square().sum() / static_cast<double>(m);
    if (variance > options.var_threshold) model.kept_dims.push_back(static_cast<std::size_t>(c));
  }
  if (model.kept_dims.empty()) {
    throw DegenerateData("every dimension has variance <= var_threshold");
  }

  const Eigen::Index d = static_cast<Eigen::Index>(model.kept_dims.size());
  model.samples.resize(m, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    model.samples.col(k) = samples.col(static_cast<Eigen::Index>(model.kept_dims[k]));
  }

  model.bandwidth_factor = scott_factor(static_cast<std::size_t>(m), static_cast<std::size_t>(d));
  const Eigen::MatrixXd centered = model.samples.rowwise() - model.samples.colwise().mean();
  const Eigen::MatrixXd covariance =
      (centered.transpose() * centered) / static_cast<double>(m - 1);
  const Eigen::MatrixXd kernel = model.bandwidth_factor * model.bandwidth_factor * covariance;

  const double mean_variance = kernel.trace() / static_cast<double>(d);
  for (double ridge : {0.0, options.alpha, options.covariance_alpha}) {
    Eigen::MatrixXd candidate = kernel;
    candidate.diagonal().array() += ridge * mean_variance;
    if (auto lower = cholesky_factor(candidate)) {
      model.cholesky = std::move(*lower);
      model.regularization = ridge;
      model.finalize();
      return model;
    }
  }
  throw DegenerateData("kernel covariance is singular even after regularization");
}

double estimate_log_density(const DensityModel& model, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != model.input_width) {
    throw DimensionError("density over " + std::to_string(model.input_width) + " values given " +
                         std::to_string(x.size()));
  }
  const Eigen::Index d = static_cast<Eigen::Index>(model.kept_dims.size());
  Eigen::VectorXd projected(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    projected(k) = x(static_cast<Eigen::Index>(model.kept_dims[k]));
  }
  const Eigen::RowVectorXd query =
      model.cholesky.triangularView<Eigen::Lower>().solve(projected).transpose();

  const Eigen::VectorXd exponents =
      -0.5 * (model.whitened.rowwise() - query).rowwise().squaredNorm();
  const double peak = exponents.maxCoeff();
  const double sum = (exponents.array() - peak).exp().sum();
  return peak + std::log(sum) + model.log_norm_const;
}

}  // namespace trustmon::selfchecker

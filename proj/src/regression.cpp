#include "kfosu/regression.hpp"

#include <cmath>
#include <limits>
#include <vector>
#include <string>

namespace kfosu {

RegressorSet::RegressorSet(const Eigen::Ref<const Matrix>& first_spectra, const FourierBasis& basis,
                           double rho)
    : full_(first_spectra.transpose()), reduced_(basis.reduce_columns(full_)), rho_(rho) {
  if (!(rho > 0.0)) throw ConfigError("RegressorSet: rho must be positive");
  if (full_.cols() < 1) throw ConfigError("RegressorSet: need at least one regressor");
  system_ = 2.0 * reduced_.transpose() * reduced_ + rho_ * full_.transpose() * full_;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(system_, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition_ <= 1e12)) {
    throw NumericalError("RegressorSet: regression system is singular (condition " +
                         std::to_string(condition_) + "); increase P or use less collinear regressors");
  }
  llt_.compute(system_);
  if (llt_.info() != Eigen::Success) {
    throw NumericalError("RegressorSet: regression system is not positive definite");
  }
}

double regression_objective(const RegressorSet& regressors, const Matrix& coefficients,
                            const Matrix& target) {
  return (regressors.reduced_space() * coefficients - target).squaredNorm();
}

RegressionResult solve_regression(const RegressorSet& regressors, const Matrix& target,
                                  const AdmmConfig& config,
                                  const std::optional<AdmmWarmStart>& warm_start,
                                  std::vector<double>* residual_history) {
  const Matrix& y = regressors.full_space();
  const Matrix& yr = regressors.reduced_space();
  const Eigen::Index k = target.cols();
  if (target.rows() != yr.rows()) {
    throw ConfigError("solve_regression: target has " + std::to_string(target.rows()) +
                      " rows, expected " + std::to_string(yr.rows()));
  }
  if (config.rho != regressors.rho()) {
    throw ConfigError("solve_regression: rho differs from the one the regressors were factored with");
  }
  if (config.max_iters < 1) throw ConfigError("solve_regression: max_iters must be positive");
  if (y.cols() < k) throw ConfigError("solve_regression: need P >= K regressors");

  const double rho = config.rho;
  Matrix u = Matrix::Zero(y.rows(), k);
  Matrix lambda = Matrix::Zero(y.rows(), k);
  if (warm_start) {
    if (warm_start->splitting.rows() != y.rows() || warm_start->splitting.cols() != k ||
        warm_start->multiplier.rows() != y.rows() || warm_start->multiplier.cols() != k) {
      throw ConfigError("solve_regression: warm start has the wrong shape");
    }
    u = warm_start->splitting;
    lambda = warm_start->multiplier;
  }

  const Matrix data_term = 2.0 * yr.transpose() * target;  // 2 Yr^T S~
  RegressionResult out;
  Matrix fitted(y.rows(), k);
  Matrix rhs(y.cols(), k);
  for (int iter = 0; iter < config.max_iters; ++iter) {
    rhs.noalias() = y.transpose() * (lambda + rho * u);
    rhs += data_term;
    if (config.use_cached_factorization) {
      out.coefficients = regressors.solve_cached(rhs);
    } else {
      out.coefficients = regressors.system_matrix().colPivHouseholderQr().solve(rhs);
    }
    fitted.noalias() = y * out.coefficients;
    const Matrix u_prev = u;
    u = (fitted - lambda / rho).cwiseMax(0.0);
    lambda += rho * (u - fitted);
    out.iterations = iter + 1;
    out.primal_residual = (u - fitted).norm();
    if (residual_history) residual_history->push_back(out.primal_residual);
    if (config.primal_tol > 0.0 && out.primal_residual <= config.primal_tol) {
      // Primal feasibility alone can hold at a non-optimal point, so also
      // require a small dual residual.
      const double dual = rho * (y.transpose() * (u - u_prev)).norm();
      if (dual <= config.primal_tol) break;
    }
  }
  out.endmembers = (y * out.coefficients).cwiseMax(0.0);
  out.splitting = std::move(u);
  out.multiplier = std::move(lambda);
  return out;
}

}  // namespace kfosu

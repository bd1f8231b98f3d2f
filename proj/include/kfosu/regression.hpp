#pragma once

#include "kfosu/fourier.hpp"
#include "kfosu/types.hpp"

#include <optional>
#include <vector>

namespace kfosu {

/// The P regressor spectra in both spaces plus the factorization of the
/// fixed ADMM system matrix 2 Yr^T Yr + rho Y^T Y (P x P).
class RegressorSet {
 public:
  /// `first_spectra` holds the regressors as rows (P x L).
  RegressorSet(const Eigen::Ref<const Matrix>& first_spectra, const FourierBasis& basis, double rho);

  const Matrix& full_space() const { return full_; }        // L x P
  const Matrix& reduced_space() const { return reduced_; }  // 2M x P
  double rho() const { return rho_; }
  const Matrix& system_matrix() const { return system_; }
  double condition_number() const { return condition_; }
  /// True when the system condition number exceeds 1e8 (accuracy at risk).
  bool ill_conditioned() const { return condition_ > 1e8; }

  Matrix solve_cached(const Matrix& rhs) const { return llt_.solve(rhs); }

 private:
  Matrix full_;
  Matrix reduced_;
  double rho_;
  Matrix system_;
  Eigen::LLT<Matrix> llt_;
  double condition_ = 0.0;
};

struct AdmmConfig {
  double rho = 1.0;
  int max_iters = 50;
  // 0 disables early exit, leaving the iteration cap as the only stopping rule.
  double primal_tol = 0.0;
  // Re-factorize the system every iteration instead of using the cache.
  bool use_cached_factorization = true;
};

struct AdmmWarmStart {
  Matrix splitting;   // U, L x K
  Matrix multiplier;  // lambda, L x K
};

struct RegressionResult {
  Matrix coefficients;  // R, P x K
  Matrix endmembers;    // max(0, Y R), L x K
  Matrix splitting;     // U at exit
  Matrix multiplier;    // lambda at exit
  int iterations = 0;
  double primal_residual = 0.0;  // ||U - Y R||_F at exit
};

/// ADMM for  min_R ||Yr R - target||_F^2  s.t.  Y R >= 0.
/// The returned endmembers are clamped at zero, so they are nonnegative even
/// when the iteration cap stops ADMM short of exact feasibility.
RegressionResult solve_regression(const RegressorSet& regressors, const Matrix& target,
                                  const AdmmConfig& config,
                                  const std::optional<AdmmWarmStart>& warm_start = std::nullopt,
                                  std::vector<double>* residual_history = nullptr);

/// ||Yr R - target||_F^2.
double regression_objective(const RegressorSet& regressors, const Matrix& coefficients,
                            const Matrix& target);

}  // namespace kfosu

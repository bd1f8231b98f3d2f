#pragma once

#include "kfosu/types.hpp"

namespace kfosu {

/// Gaussian posterior over the column-stacked reduced endmember matrix.
///
/// The state vector has K blocks of length `block_dim` (= 2M); block k holds
/// reduced endmember k. The observation operator for a concentration vector c
/// is H = c^T (x) I_block_dim and is only ever applied block-wise.
struct FilterState {
  Vector mean;
  Matrix covariance;
  Eigen::Index block_dim = 0;
  Eigen::Index n_endmembers = 0;
  long t = 0;

  /// mean = vec(reduced), covariance = prior_variance * I.
  static FilterState from_reduced(const Matrix& reduced, double prior_variance, long t = 0);

  /// Mean reshaped back to block_dim x K.
  Matrix unvec() const;
  /// Overwrite the mean with vec(reduced); the covariance is left untouched.
  void set_mean(const Matrix& reduced);
  void validate() const;
};

struct NoiseConfig {
  double sigma_v2 = 1.0;  // random-walk variance of every state entry per step
  double sigma_e2 = 1.0;  // observation noise variance in reduced coordinates
};

/// Running state of the dictionary-learning update: mean plus the Gram
/// accumulator A = sum_i c_i c_i^T.
struct DlState {
  Vector mean;
  Matrix gram;
  Eigen::Index block_dim = 0;
  Eigen::Index n_endmembers = 0;
  long t = 0;

  static DlState from_reduced(const Matrix& reduced, const Matrix& gram, long t = 0);
  Matrix unvec() const;
  void set_mean(const Matrix& reduced);
};

/// H s for H = c^T (x) I_block_dim, i.e. sum_k c_k s^(k).
Vector apply_observation(const Eigen::Ref<const Vector>& stacked, const Eigen::Ref<const Vector>& c,
                         Eigen::Index block_dim);

/// Explicit H = c^T (x) I_block_dim. Only used by tests and diagnostics.
Matrix observation_matrix(const Eigen::Ref<const Vector>& c, Eigen::Index block_dim);

/// One predict/correct cycle of the random-walk Kalman filter. `c` must lie
/// on the unit simplex. Throws NumericalError when the innovation covariance
/// has condition number above 1e12.
FilterState kf_update(const FilterState& state, const Eigen::Ref<const Vector>& y_reduced,
                      const Eigen::Ref<const Vector>& c, const NoiseConfig& noise);

/// Exponentially weighted recursive least squares with forgetting factor
/// lambda in (0, 1]. `state.covariance` plays the role of the inverse
/// information matrix P:
///   P+ = (P - P H^T (lambda I + H P H^T)^-1 H P) / lambda,  s+ = s + P+ H^T (y - H s).
FilterState rls_update(const FilterState& state, const Eigen::Ref<const Vector>& y_reduced,
                       const Eigen::Ref<const Vector>& c, double lambda);

/// Online dictionary-learning step: A+ = A + c c^T, s+ = s + ((A+^-1 c) (x) I)(y - H s).
/// A+ is regularized with 1e-10 I when it is not positive definite.
DlState dl_update(const DlState& state, const Eigen::Ref<const Vector>& y_reduced,
                  const Eigen::Ref<const Vector>& c);

}  // namespace kfosu

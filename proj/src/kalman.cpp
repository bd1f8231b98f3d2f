#include "kfosu/kalman.hpp"

#include <cmath>
#include <string>

namespace kfosu {

namespace {

void check_dims(Eigen::Index mean_size, Eigen::Index block_dim, Eigen::Index k,
                Eigen::Index y_size, Eigen::Index c_size) {
  if (block_dim < 1 || k < 1 || mean_size != block_dim * k) {
    throw ConfigError("filter state dimensions inconsistent with (2M, K)");
  }
  if (y_size != block_dim) {
    throw ConfigError("observation has length " + std::to_string(y_size) + ", expected " +
                      std::to_string(block_dim));
  }
  if (c_size != k) {
    throw ConfigError("concentration vector has length " + std::to_string(c_size) +
                      ", expected " + std::to_string(k));
  }
}

void check_simplex(const Eigen::Ref<const Vector>& c) {
  if (c.minCoeff() < -kNonnegTol || std::abs(c.sum() - 1.0) > kClosureTol) {
    throw ConfigError("kf_update: concentrations must be nonnegative and sum to one");
  }
}

// Sigma H^T computed block-wise: sum_k c_k Sigma(:, block k).
Matrix times_observation_transpose(const Matrix& sigma, const Eigen::Ref<const Vector>& c,
                                   Eigen::Index block_dim) {
  Matrix out = Matrix::Zero(sigma.rows(), block_dim);
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    if (c(k) != 0.0) out.noalias() += c(k) * sigma.middleCols(k * block_dim, block_dim);
  }
  return out;
}

// H X for a stacked n x d matrix X: sum_k c_k X(block k, :).
Matrix observation_times(const Matrix& x, const Eigen::Ref<const Vector>& c, Eigen::Index block_dim) {
  Matrix out = Matrix::Zero(block_dim, x.cols());
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    if (c(k) != 0.0) out.noalias() += c(k) * x.middleRows(k * block_dim, block_dim);
  }
  return out;
}

void symmetrize(Matrix& m) {
  m = 0.5 * (m + m.transpose()).eval();
}

Matrix unstack(const Vector& mean, Eigen::Index block_dim, Eigen::Index k) {
  return Eigen::Map<const Matrix>(mean.data(), block_dim, k);
}

}  // namespace

FilterState FilterState::from_reduced(const Matrix& reduced, double prior_variance, long t) {
  if (prior_variance < 0.0) throw ConfigError("FilterState: negative prior variance");
  FilterState s;
  s.block_dim = reduced.rows();
  s.n_endmembers = reduced.cols();
  s.mean = Eigen::Map<const Vector>(reduced.data(), reduced.size());
  s.covariance = prior_variance * Matrix::Identity(reduced.size(), reduced.size());
  s.t = t;
  return s;
}

Matrix FilterState::unvec() const { return unstack(mean, block_dim, n_endmembers); }

void FilterState::set_mean(const Matrix& reduced) {
  if (reduced.rows() != block_dim || reduced.cols() != n_endmembers) {
    throw ConfigError("FilterState::set_mean: shape mismatch");
  }
  mean = Eigen::Map<const Vector>(reduced.data(), reduced.size());
}

void FilterState::validate() const {
  const Eigen::Index n = block_dim * n_endmembers;
  if (mean.size() != n || covariance.rows() != n || covariance.cols() != n) {
    throw ConfigError("FilterState: dimensions inconsistent with (2M, K)");
  }
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw NumericalError("FilterState: covariance not symmetric");
  }
}

DlState DlState::from_reduced(const Matrix& reduced, const Matrix& gram, long t) {
  if (gram.rows() != reduced.cols() || gram.cols() != reduced.cols()) {
    throw ConfigError("DlState: Gram accumulator must be K x K");
  }
  DlState s;
  s.block_dim = reduced.rows();
  s.n_endmembers = reduced.cols();
  s.mean = Eigen::Map<const Vector>(reduced.data(), reduced.size());
  s.gram = gram;
  s.t = t;
  return s;
}

Matrix DlState::unvec() const { return unstack(mean, block_dim, n_endmembers); }

void DlState::set_mean(const Matrix& reduced) {
  if (reduced.rows() != block_dim || reduced.cols() != n_endmembers) {
    throw ConfigError("DlState::set_mean: shape mismatch");
  }
  mean = Eigen::Map<const Vector>(reduced.data(), reduced.size());
}

Vector apply_observation(const Eigen::Ref<const Vector>& stacked, const Eigen::Ref<const Vector>& c,
                         Eigen::Index block_dim) {
  if (stacked.size() != block_dim * c.size()) {
    throw ConfigError("apply_observation: state length is not block_dim * K");
  }
  Vector out = Vector::Zero(block_dim);
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    out.noalias() += c(k) * stacked.segment(k * block_dim, block_dim);
  }
  return out;
}

Matrix observation_matrix(const Eigen::Ref<const Vector>& c, Eigen::Index block_dim) {
  Matrix h = Matrix::Zero(block_dim, block_dim * c.size());
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    h.middleCols(k * block_dim, block_dim).diagonal().setConstant(c(k));
  }
  return h;
}

FilterState kf_update(const FilterState& state, const Eigen::Ref<const Vector>& y_reduced,
                      const Eigen::Ref<const Vector>& c, const NoiseConfig& noise) {
  const Eigen::Index d = state.block_dim;
  check_dims(state.mean.size(), d, state.n_endmembers, y_reduced.size(), c.size());
  check_simplex(c);
  if (!(noise.sigma_e2 > 0.0) || noise.sigma_v2 < 0.0) {
    throw ConfigError("kf_update: need sigma_e2 > 0 and sigma_v2 >= 0");
  }

  FilterState next = state;
  // Predict.
  next.covariance.diagonal().array() += noise.sigma_v2;
  // Innovation and its covariance.
  const Vector innovation = y_reduced - apply_observation(state.mean, c, d);
  const Matrix cross = times_observation_transpose(next.covariance, c, d);  // Sigma_pred H^T
  Matrix z = observation_times(cross, c, d);
  z.diagonal().array() += noise.sigma_e2;
  symmetrize(z);

  const Eigen::LLT<Matrix> llt(z);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
    throw NumericalError("kf_update: innovation covariance is numerically singular");
  }
  // gain = cross Z^-1  <=>  gain^T = Z^-1 cross^T
  const Matrix gain = llt.solve(cross.transpose()).transpose();

  next.mean.noalias() += gain * innovation;
  next.covariance.noalias() -= gain * cross.transpose();
  symmetrize(next.covariance);
  next.t = state.t + 1;
  return next;
}

FilterState rls_update(const FilterState& state, const Eigen::Ref<const Vector>& y_reduced,
                       const Eigen::Ref<const Vector>& c, double lambda) {
  const Eigen::Index d = state.block_dim;
  check_dims(state.mean.size(), d, state.n_endmembers, y_reduced.size(), c.size());
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("rls_update: lambda must lie in (0, 1]");

  const Vector residual = y_reduced - apply_observation(state.mean, c, d);
  const Matrix cross = times_observation_transpose(state.covariance, c, d);  // P H^T
  Matrix s = observation_times(cross, c, d);                                // H P H^T
  s.diagonal().array() += lambda;
  symmetrize(s);
  const Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
    throw NumericalError("rls_update: singular intermediate matrix");
  }

  FilterState next = state;
  next.covariance.noalias() -= cross * llt.solve(cross.transpose());
  next.covariance /= lambda;
  symmetrize(next.covariance);
  // Gain P+ H^T.
  const Matrix gain = times_observation_transpose(next.covariance, c, d);
  next.mean.noalias() += gain * residual;
  next.t = state.t + 1;
  return next;
}

DlState dl_update(const DlState& state, const Eigen::Ref<const Vector>& y_reduced,
                  const Eigen::Ref<const Vector>& c) {
  const Eigen::Index d = state.block_dim;
  const Eigen::Index k = state.n_endmembers;
  check_dims(state.mean.size(), d, k, y_reduced.size(), c.size());
  if (state.gram.rows() != k || state.gram.cols() != k) {
    throw ConfigError("dl_update: Gram accumulator must be K x K");
  }

  DlState next = state;
  next.gram.noalias() += c * c.transpose();
  Eigen::LLT<Matrix> llt(next.gram);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
    llt.compute(next.gram + 1e-10 * Matrix::Identity(k, k));
  }
  const Vector weights = llt.solve(c);

  const Vector residual = y_reduced - apply_observation(state.mean, c, d);
  for (Eigen::Index j = 0; j < k; ++j) {
    next.mean.segment(j * d, d).noalias() += weights(j) * residual;
  }
  next.t = state.t + 1;
  return next;
}

}  // namespace kfosu

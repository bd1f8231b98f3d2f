#pragma once

#include "kfosu/types.hpp"

#include <optional>

namespace kfosu {

struct FclsConfig {
  // ADMM step. Unset: sqrt(lambda_min * lambda_max) of S^T S, with lambda_min
  // floored at 1e-6 lambda_max, which keeps the solver scale-free.
  std::optional<double> rho;
  int max_iters = 200;
  double tol = 1e-8;
};

struct FclsResult {
  Vector concentrations;
  int iterations = 0;
  double objective = 0.0;        // ||y - S c||^2
  bool ill_conditioned = false;  // a 1e-10 ridge was added to S^T S
};

/// Euclidean projection onto the unit simplex {c >= 0, sum c = 1}.
Vector project_to_simplex(const Eigen::Ref<const Vector>& v);

/// Fully constrained least squares  min ||y - S c||^2  s.t. c >= 0, 1^T c = 1.
///
/// ADMM splitting: the quadratic block with the sum-to-one constraint is
/// solved in closed form, nonnegativity by projection. The ADMM support is
/// then refined by a short active-set pass on the reduced KKT system and the
/// better of the two points is returned, projected onto the simplex.
///
/// The per-endmember-matrix work (Gram, factorization, step size) is done
/// once at construction, so one solver serves many spectra.
class FclsSolver {
 public:
  FclsSolver(const Eigen::Ref<const Matrix>& endmembers, const FclsConfig& config = {});

  FclsResult solve(const Eigen::Ref<const Vector>& y) const;

  Eigen::Index n_endmembers() const { return gram_.rows(); }
  double rho() const { return rho_; }
  bool ill_conditioned() const { return ill_conditioned_; }

 private:
  double objective(const Vector& c, const Eigen::Ref<const Vector>& y) const;
  std::optional<Vector> active_set_refine(const Vector& start, const Vector& sty) const;

  Matrix endmembers_;
  Matrix gram_;
  FclsConfig config_;
  double rho_ = 1.0;
  bool ill_conditioned_ = false;
  Eigen::LLT<Matrix> step_llt_;  // (S^T S + rho I)
  Vector step_ones_;             // (S^T S + rho I)^-1 1
  double step_ones_sum_ = 1.0;
};

FclsResult estimate_concentration(const Eigen::Ref<const Vector>& y,
                                  const Eigen::Ref<const Matrix>& endmembers,
                                  const FclsConfig& config = {});

/// FCLS for every row of `spectra` (N x L) against the same endmembers.
Matrix estimate_concentrations(const Eigen::Ref<const Matrix>& spectra,
                               const Eigen::Ref<const Matrix>& endmembers,
                               const FclsConfig& config = {});

}  // namespace kfosu

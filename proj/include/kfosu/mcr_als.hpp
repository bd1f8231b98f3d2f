#pragma once

#include "kfosu/abundance.hpp"
#include "kfosu/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kfosu {

struct McrConfig {
  int max_iters = 60;
  double rel_tol = 1e-8;
  Matrix init;  // L x K, nonnegative, no zero column
  FclsConfig fcls;
};

struct McrResult {
  Matrix concentrations;  // N x K, rows on the simplex
  Matrix endmembers;      // L x K, nonnegative
  // ||Y - C S^T||_F after every outer iteration.
  std::vector<double> residual_history;
  int iterations = 0;
  std::vector<std::string> warnings;
};

struct NnlsResult {
  Vector x;
  int iterations = 0;
};

/// Lawson-Hanson active-set NNLS in normal-equation form:
/// min 0.5 x^T G x - b^T x  s.t.  x >= 0, for symmetric positive definite G.
NnlsResult nnls_gram(const Eigen::Ref<const Matrix>& gram, const Eigen::Ref<const Vector>& rhs);

/// Alternating least squares for Y (N x L) ~ C S^T: the C-step is FCLS per
/// row, the S-step NNLS per channel. A row whose new abundances fit worse
/// than the previous ones keeps the previous ones, so the residual never
/// increases.
McrResult mcr_als(const Eigen::Ref<const Matrix>& spectra, const McrConfig& config);

/// Nonnegative starting endmembers from the first K principal loadings of Y
/// (no centering, sign fixed so each loading has a positive sum, clamped at
/// zero). Falls back to VCA when a clamped loading is null.
Matrix mcr_initial_endmembers(const Eigen::Ref<const Matrix>& spectra, Eigen::Index n_endmembers,
                              std::uint64_t seed, std::vector<std::string>* warnings = nullptr);

}  // namespace kfosu

#include "kfosu/mcr_als.hpp"

#include "kfosu/vca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kfosu {

NnlsResult nnls_gram(const Eigen::Ref<const Matrix>& gram, const Eigen::Ref<const Vector>& rhs) {
  const Eigen::Index k = gram.rows();
  if (gram.cols() != k || rhs.size() != k) throw ConfigError("nnls: shape mismatch");
  NnlsResult out;
  out.x = Vector::Zero(k);
  std::vector<bool> passive(static_cast<std::size_t>(k), false);
  const double tol = 1e-12 * std::max({1.0, rhs.cwiseAbs().maxCoeff(), gram.cwiseAbs().maxCoeff()});
  const int max_outer = static_cast<int>(3 * k + 10);

  auto solve_passive = [&](Vector& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
    }
    const auto p = static_cast<Eigen::Index>(idx.size());
    Matrix g(p, p);
    Vector b(p);
    for (Eigen::Index a = 0; a < p; ++a) {
      b(a) = rhs(idx[static_cast<std::size_t>(a)]);
      for (Eigen::Index c = 0; c < p; ++c) g(a, c) = gram(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(c)]);
    }
    const Vector sol = g.ldlt().solve(b);
    z = Vector::Zero(k);
    for (Eigen::Index a = 0; a < p; ++a) z(idx[static_cast<std::size_t>(a)]) = sol(a);
  };

  for (int outer = 0; outer < max_outer; ++outer) {
    const Vector w = rhs - gram * out.x;
    Eigen::Index j = -1;
    double best = tol;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (!passive[static_cast<std::size_t>(i)] && w(i) > best) {
        best = w(i);
        j = i;
      }
    }
    if (j < 0) break;
    passive[static_cast<std::size_t>(j)] = true;
    ++out.iterations;
    Vector z;
    for (int inner = 0; inner <= k; ++inner) {
      solve_passive(z);
      bool feasible = true;
      double alpha = 1.0;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (passive[static_cast<std::size_t>(i)] && z(i) <= 0.0) {
          feasible = false;
          const double denom = out.x(i) - z(i);
          if (denom > 0.0) alpha = std::min(alpha, out.x(i) / denom);
        }
      }
      if (feasible) break;
      out.x += alpha * (z - out.x);
      for (Eigen::Index i = 0; i < k; ++i) {
        if (passive[static_cast<std::size_t>(i)] && out.x(i) <= tol) {
          passive[static_cast<std::size_t>(i)] = false;
          out.x(i) = 0.0;
        }
      }
    }
    for (Eigen::Index i = 0; i < k; ++i) out.x(i) = passive[static_cast<std::size_t>(i)] ? std::max(z(i), 0.0) : 0.0;
  }
  return out;
}

namespace {

double row_objective(const Vector& y, const Matrix& s, const Vector& c) { return (y - s * c).squaredNorm(); }

}  // namespace

McrResult mcr_als(const Eigen::Ref<const Matrix>& spectra, const McrConfig& config) {
  const Eigen::Index n = spectra.rows();
  const Eigen::Index l = spectra.cols();
  const Eigen::Index k = config.init.cols();
  if (config.max_iters < 1) throw ConfigError("mcr_als: max_iters must be >= 1");
  if (config.init.rows() != l) throw ConfigError("mcr_als: init has the wrong number of channels");
  if (k < 1 || n < k) throw ConfigError("mcr_als: need 1 <= K <= N");
  if (config.init.minCoeff() < 0.0) throw ConfigError("mcr_als: init must be nonnegative");
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(config.init.col(j).maxCoeff() > 0.0)) throw ConfigError("mcr_als: init has a zero column");
  }

  const double y_norm = spectra.norm();
  McrResult out;
  out.endmembers = config.init;
  out.concentrations = Matrix::Zero(n, k);
  bool have_c = false;
  double previous = std::numeric_limits<double>::infinity();
  bool ridge_warned = false;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    // C-step.
    const FclsSolver solver(out.endmembers, config.fcls);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector y = spectra.row(i).transpose();
      const Vector c = solver.solve(y).concentrations;
      if (have_c) {
        const Vector old = out.concentrations.row(i).transpose();
        if (row_objective(y, out.endmembers, c) > row_objective(y, out.endmembers, old)) continue;
      }
      out.concentrations.row(i) = c.transpose();
    }
    have_c = true;

    // S-step, channel by channel on the shared Gram matrix.
    Matrix gram = out.concentrations.transpose() * out.concentrations;
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues().maxCoeff();
    if (eig.eigenvalues().minCoeff() <= 1e-12 * std::max(top, 1e-300)) {
      gram.diagonal().array() += 1e-10 * std::max(top, 1.0);
      if (!ridge_warned) {
        out.warnings.push_back("mcr_als: rank-deficient concentrations, ridge 1e-10 added in the S-step");
        ridge_warned = true;
      }
    }
    const Matrix cty = out.concentrations.transpose() * spectra;  // K x L
    Matrix s_new(l, k);
    for (Eigen::Index ch = 0; ch < l; ++ch) s_new.row(ch) = nnls_gram(gram, cty.col(ch)).x.transpose();
    const double res_new = (spectra - out.concentrations * s_new.transpose()).norm();
    const double res_old = (spectra - out.concentrations * out.endmembers.transpose()).norm();
    // A column that vanished would break the next C-step; keep the old S then.
    bool zero_col = false;
    for (Eigen::Index j = 0; j < k; ++j) zero_col = zero_col || !(s_new.col(j).maxCoeff() > 0.0);
    if (!zero_col && res_new <= res_old) out.endmembers = s_new;
    const double residual = std::min(res_new, res_old);
    if (zero_col && res_new < res_old) out.warnings.push_back("mcr_als: S-step produced a null endmember");

    out.residual_history.push_back(zero_col ? res_old : residual);
    out.iterations = iter + 1;
    const double current = out.residual_history.back();
    if (std::isfinite(previous) && std::abs(previous - current) <= config.rel_tol * std::max(previous, 1e-300)) break;
    // Exact fit up to rounding: nothing left to improve.
    if (current <= 1e-12 * y_norm) break;
    previous = current;
  }
  return out;
}

Matrix mcr_initial_endmembers(const Eigen::Ref<const Matrix>& spectra, Eigen::Index n_endmembers,
                              std::uint64_t seed, std::vector<std::string>* warnings) {
  const Eigen::Index l = spectra.cols();
  if (n_endmembers < 1 || n_endmembers > l) throw ConfigError("mcr init: invalid K");
  const Matrix y = spectra;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(y.transpose() * y);
  Matrix init(l, n_endmembers);
  bool null_col = false;
  for (Eigen::Index j = 0; j < n_endmembers; ++j) {
    Vector v = eig.eigenvectors().col(l - 1 - j);
    if (v.sum() < 0.0) v = -v;
    v = v.cwiseMax(0.0);
    if (!(v.maxCoeff() > 0.0)) {
      null_col = true;
      continue;
    }
    // Loadings have unit norm while closure ties the abundances to the data
    // scale, so stretch each one to the pixel that projects furthest on it.
    const double top = (y * v).maxCoeff() / v.squaredNorm();
    init.col(j) = top > 0.0 ? Vector(top * v) : v;
  }
  if (!null_col) return init;
  if (warnings) warnings->push_back("mcr init: clamped PCA loading is null, using VCA");
  VcaConfig vc;
  vc.n_endmembers = n_endmembers;
  vc.seed = seed;
  Matrix s = vca(spectra, vc).endmembers;
  for (Eigen::Index j = 0; j < n_endmembers; ++j) {
    if (!(s.col(j).maxCoeff() > 0.0)) s.col(j).setConstant(1.0);
  }
  return s;
}

}  // namespace kfosu

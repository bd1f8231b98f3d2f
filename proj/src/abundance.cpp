#include "kfosu/abundance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace kfosu {

namespace {

// Equality-constrained least squares on a support:  min c^T G c - 2 b^T c  s.t. 1^T c = 1.
Vector solve_on_support(const Matrix& gram, const Vector& sty, const std::vector<Eigen::Index>& support) {
  const auto n = static_cast<Eigen::Index>(support.size());
  Matrix g(n, n);
  Vector b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b(i) = sty(support[i]);
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = gram(support[i], support[j]);
  }
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
    const double ridge = 1e-10 * std::max(g.trace() / static_cast<double>(n), 1e-300);
    llt.compute(g + ridge * Matrix::Identity(n, n));
  }
  const Vector gb = llt.solve(b);
  const Vector g1 = llt.solve(Vector::Ones(n));
  const double nu = (gb.sum() - 1.0) / g1.sum();
  return gb - nu * g1;
}

}  // namespace

Vector project_to_simplex(const Eigen::Ref<const Vector>& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw ConfigError("project_to_simplex: empty vector");
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cumsum += sorted[static_cast<std::size_t>(i)];
    const double candidate = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (sorted[static_cast<std::size_t>(i)] - candidate > 0.0) theta = candidate;
  }
  Vector out = (v.array() - theta).cwiseMax(0.0);
  // Renormalize away the last few ulps of closure error.
  const double s = out.sum();
  if (s > 0.0) out /= s;
  return out;
}

FclsSolver::FclsSolver(const Eigen::Ref<const Matrix>& endmembers, const FclsConfig& config)
    : endmembers_(endmembers), config_(config) {
  const Eigen::Index k = endmembers_.cols();
  if (k < 1) throw ConfigError("estimate_concentration: need at least one endmember");
  if (endmembers_.rows() < 1) throw ConfigError("estimate_concentration: empty endmember matrix");
  if (config.max_iters < 1) throw ConfigError("FclsConfig: max_iters must be positive");
  if (config.rho && !(*config.rho > 0.0)) throw ConfigError("FclsConfig: rho must be positive");

  gram_ = endmembers_.transpose() * endmembers_;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram_, Eigen::EigenvaluesOnly);
  const double hi = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  const double lo = eig.eigenvalues().minCoeff();
  if (!(hi > 0.0)) throw ConfigError("estimate_concentration: endmember matrix is zero");
  if (!(lo > hi * 1e-12)) {
    ill_conditioned_ = true;
    gram_.diagonal().array() += 1e-10 * hi;
  }
  rho_ = config.rho ? *config.rho : std::sqrt(std::max(lo, 1e-6 * hi) * hi);

  Matrix step = gram_;
  step.diagonal().array() += rho_;
  step_llt_.compute(step);
  step_ones_ = step_llt_.solve(Vector::Ones(k));
  step_ones_sum_ = step_ones_.sum();
}

double FclsSolver::objective(const Vector& c, const Eigen::Ref<const Vector>& y) const {
  // Residual form: the expanded quadratic loses all precision near an exact fit.
  return (y - endmembers_ * c).squaredNorm();
}

std::optional<Vector> FclsSolver::active_set_refine(const Vector& start, const Vector& sty) const {
  const Eigen::Index k = gram_.rows();
  std::vector<bool> in_support(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) in_support[static_cast<std::size_t>(i)] = start(i) > 1e-12;
  if (std::none_of(in_support.begin(), in_support.end(), [](bool b) { return b; })) {
    Eigen::Index best = 0;
    start.maxCoeff(&best);
    in_support[static_cast<std::size_t>(best)] = true;
  }
  const double kkt_eps = 1e-10 * std::max(1.0, gram_.diagonal().maxCoeff());

  for (Eigen::Index round = 0; round < 3 * k + 3; ++round) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (in_support[static_cast<std::size_t>(i)]) support.push_back(i);
    }
    const Vector sub = solve_on_support(gram_, sty, support);
    Eigen::Index worst = -1;
    double worst_value = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (sub(static_cast<Eigen::Index>(i)) < worst_value) {
        worst_value = sub(static_cast<Eigen::Index>(i));
        worst = support[i];
      }
    }
    if (worst >= 0) {
      if (support.size() == 1) return std::nullopt;
      in_support[static_cast<std::size_t>(worst)] = false;
      continue;
    }
    Vector c = Vector::Zero(k);
    for (std::size_t i = 0; i < support.size(); ++i) c(support[i]) = sub(static_cast<Eigen::Index>(i));

    // KKT: gradient g = G c - b; on the support g_i = -nu, off it g_j + nu >= 0.
    const Vector grad = gram_ * c - sty;
    double nu = 0.0;
    for (const auto i : support) nu -= grad(i);
    nu /= static_cast<double>(support.size());
    Eigen::Index entering = -1;
    double most_violated = -kkt_eps;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (in_support[static_cast<std::size_t>(j)]) continue;
      if (grad(j) + nu < most_violated) {
        most_violated = grad(j) + nu;
        entering = j;
      }
    }
    if (entering < 0) return c;
    in_support[static_cast<std::size_t>(entering)] = true;
  }
  return std::nullopt;
}

FclsResult FclsSolver::solve(const Eigen::Ref<const Vector>& y) const {
  const Eigen::Index k = gram_.rows();
  if (y.size() != endmembers_.rows()) {
    throw ConfigError("estimate_concentration: spectrum has " + std::to_string(y.size()) +
                      " channels, endmembers have " + std::to_string(endmembers_.rows()));
  }
  FclsResult out;
  out.ill_conditioned = ill_conditioned_;
  const Vector sty = endmembers_.transpose() * y;
  if (k == 1) {
    out.concentrations = Vector::Ones(1);
    out.objective = objective(out.concentrations, y);
    return out;
  }

  Vector z = Vector::Constant(k, 1.0 / static_cast<double>(k));
  Vector u = Vector::Zero(k);
  Vector c(k);
  for (int iter = 0; iter < config_.max_iters; ++iter) {
    c = step_llt_.solve(sty + rho_ * (z - u));
    c -= step_ones_ * ((c.sum() - 1.0) / step_ones_sum_);
    const Vector z_next = (c + u).cwiseMax(0.0);
    u += c - z_next;
    const double primal = (c - z_next).norm();
    const double dual = (z_next - z).norm();
    z = z_next;
    out.iterations = iter + 1;
    if (primal <= config_.tol && dual <= config_.tol) break;
  }

  Vector best = project_to_simplex(z);
  double best_obj = objective(best, y);
  if (const auto refined = active_set_refine(best, sty)) {
    const Vector candidate = project_to_simplex(*refined);
    const double obj = objective(candidate, y);
    if (obj <= best_obj) {
      best = candidate;
      best_obj = obj;
    }
  }
  out.concentrations = std::move(best);
  out.objective = best_obj;
  return out;
}

FclsResult estimate_concentration(const Eigen::Ref<const Vector>& y,
                                  const Eigen::Ref<const Matrix>& endmembers, const FclsConfig& config) {
  return FclsSolver(endmembers, config).solve(y);
}

Matrix estimate_concentrations(const Eigen::Ref<const Matrix>& spectra,
                               const Eigen::Ref<const Matrix>& endmembers, const FclsConfig& config) {
  const FclsSolver solver(endmembers, config);
  Matrix out(spectra.rows(), endmembers.cols());
  for (Eigen::Index i = 0; i < spectra.rows(); ++i) {
    out.row(i) = solver.solve(spectra.row(i).transpose()).concentrations.transpose();
  }
  return out;
}

}  // namespace kfosu

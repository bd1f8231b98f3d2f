#include "kfosu/vca.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace kfosu {

namespace {

struct Subspace {
  Matrix basis;           // L x d, leading eigenvectors of the scatter matrix
  Vector singular_values; // all of them, descending
};

// Leading d eigenvectors of (X X^T) for X = L x N, sign-normalized.
Subspace leading_subspace(const Matrix& x, Eigen::Index d) {
  const Matrix scatter = x * x.transpose();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(scatter);
  const Eigen::Index l = scatter.rows();
  Subspace out;
  out.basis.resize(l, d);
  out.singular_values.resize(l);
  for (Eigen::Index i = 0; i < l; ++i) {
    out.singular_values(i) = std::sqrt(std::max(eig.eigenvalues()(l - 1 - i), 0.0));
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    Vector v = eig.eigenvectors().col(l - 1 - j);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.basis.col(j) = v;
  }
  return out;
}

Eigen::Index argmax_abs(const Vector& v) {
  Eigen::Index best = 0;
  double best_value = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best_value) {
      best_value = a;
      best = i;
    }
  }
  return best;
}

}  // namespace

VcaResult vca(const Eigen::Ref<const Matrix>& spectra, const VcaConfig& config) {
  const Eigen::Index n = spectra.rows();
  const Eigen::Index l = spectra.cols();
  const Eigen::Index p = config.n_endmembers;
  if (p < 1) throw ConfigError("vca: need at least one endmember");
  if (n < p) throw ConfigError("vca: fewer pixels than endmembers");
  if (p > l) throw ConfigError("vca: more endmembers than channels");

  const Matrix r = spectra.transpose();  // L x N
  const Vector mean = r.rowwise().mean();
  const Matrix centered = r.colwise() - mean;
  const double nd = static_cast<double>(n);

  VcaResult out;
  const Subspace centered_sub = leading_subspace(centered, p);

  if (config.snr_estimate) {
    out.snr_db = *config.snr_estimate;
  } else {
    const Matrix xp = centered_sub.basis.transpose() * centered;
    const double power_y = r.squaredNorm() / nd;
    const double power_x = xp.squaredNorm() / nd + mean.squaredNorm();
    const double signal = power_x - static_cast<double>(p) / static_cast<double>(l) * power_y;
    const double noise = power_y - power_x;
    if (noise <= 0.0) {
      out.snr_db = std::numeric_limits<double>::infinity();
    } else if (signal <= 0.0) {
      out.snr_db = -std::numeric_limits<double>::infinity();
    } else {
      out.snr_db = 10.0 * std::log10(signal / noise);
    }
  }
  const double snr_threshold = 15.0 + 10.0 * std::log10(static_cast<double>(p));

  // Signal coordinates y (p x N) fed to the vertex search.
  Matrix y;
  Subspace used;
  if (p == 1) {
    // A single vertex: the pixel with the largest projection on the dominant
    // (uncentered) direction.
    used = leading_subspace(r, 1);
    y = used.basis.transpose() * r;
  } else if (out.snr_db < snr_threshold) {
    out.projective = true;
    used = centered_sub;
    const Matrix x = centered_sub.basis.leftCols(p - 1).transpose() * centered;
    const double c = x.colwise().norm().maxCoeff();
    y.resize(p, n);
    y.topRows(p - 1) = x;
    y.row(p - 1).setConstant(c);
  } else {
    used = leading_subspace(r, p);
    const Matrix x = used.basis.transpose() * r;
    const Vector u = x.rowwise().mean();
    y.resize(p, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double denom = u.dot(x.col(j));
      y.col(j) = std::abs(denom) > 1e-300 ? Vector(x.col(j) / denom) : Vector::Zero(p);
    }
  }

  const double top = used.singular_values(0);
  Eigen::Index significant = 0;
  for (Eigen::Index i = 0; i < used.singular_values.size(); ++i) {
    // Singular values come from eigenvalues of the scatter matrix, so rounding
    // noise shows up near sqrt(eps) * top.
    if (used.singular_values(i) > 1e-6 * top) ++significant;
  }
  if (significant < p) {
    out.warnings.push_back("vca: data has only " + std::to_string(significant) +
                           " significant singular values for " + std::to_string(p) + " endmembers");
  }

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix vertices = Matrix::Zero(p, p);
  vertices(p - 1, 0) = 1.0;
  out.indices.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) {
    Vector w(p);
    for (Eigen::Index j = 0; j < p; ++j) w(j) = normal(rng);
    Vector f = w;
    if (p > 1) {
      // The seed vertex e_p only fixes the first direction; for p = 1 it would
      // annihilate every direction.
      const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(vertices);
      f = w - vertices * cod.solve(w);
    }
    const double fn = f.norm();
    if (fn > 0.0) f /= fn;
    const Vector v = y.transpose() * f;
    const Eigen::Index idx = argmax_abs(v);
    vertices.col(i) = y.col(idx);
    out.indices.push_back(idx);
  }

  out.endmembers.resize(l, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    out.endmembers.col(k) = r.col(out.indices[static_cast<std::size_t>(k)]).cwiseMax(0.0);
  }
  return out;
}

}  // namespace kfosu

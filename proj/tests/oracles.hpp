#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance runner. Each one solves the problem by a different (slower)
// route than the library code it checks.

#include "kfosu/types.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <utility>
#include <vector>

namespace kfosu::oracle {

// Posterior mean of s under prior N(mu0, sigma0) and observations
// y_i = (c_i^T (x) I) s + e_i, e_i ~ N(0, sigma_e2 I), built with explicit H.
inline Vector batch_posterior_mean(const Vector& mu0, const Matrix& sigma0, const std::vector<Vector>& ys,
                                   const std::vector<Vector>& cs, double sigma_e2) {
  const Eigen::Index n = mu0.size();
  Matrix info = sigma0.inverse();
  Vector rhs = info * mu0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const Eigen::Index d = ys[i].size();
    Matrix h = Matrix::Zero(d, n);
    for (Eigen::Index k = 0; k < cs[i].size(); ++k) h.middleCols(k * d, d) = cs[i](k) * Matrix::Identity(d, d);
    info += h.transpose() * h / sigma_e2;
    rhs += h.transpose() * ys[i] / sigma_e2;
  }
  return info.ldlt().solve(rhs);
}

// min ||A r - b||^2 s.t. G r >= 0 by enumerating active sets. A ridge of
// eps * I makes every equality-constrained subproblem strictly convex, so the
// feasible KKT point of smallest objective is the constrained optimum up to
// O(eps). Returns the optimal objective of the unperturbed problem at that point.
inline double constrained_ls_objective(const Matrix& a, const Vector& b, const Matrix& g, double eps = 1e-11) {
  const Eigen::Index p = a.cols();
  const Eigen::Index m = g.rows();
  const Matrix q = a.transpose() * a + eps * Matrix::Identity(p, p);
  const Vector lin = a.transpose() * b;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (mask & (1u << i)) act.push_back(i);
    }
    const auto na = static_cast<Eigen::Index>(act.size());
    if (na > p) continue;
    Matrix kkt = Matrix::Zero(p + na, p + na);
    Vector rhs = Vector::Zero(p + na);
    kkt.topLeftCorner(p, p) = q;
    rhs.head(p) = lin;
    for (Eigen::Index j = 0; j < na; ++j) {
      kkt.block(p + j, 0, 1, p) = g.row(act[static_cast<std::size_t>(j)]);
      kkt.block(0, p + j, p, 1) = g.row(act[static_cast<std::size_t>(j)]).transpose();
    }
    const Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Vector sol = lu.solve(rhs);
    const Vector r = sol.head(p);
    if ((g * r).minCoeff() < -1e-10 * std::max(1.0, r.norm())) continue;
    best = std::min(best, (a * r - b).squaredNorm());
  }
  return best;
}

// Minimizer of ||y - s1 a - s2 (1 - a)||^2 over a on a uniform grid of [0, 1].
inline double grid_fcls_k2(const Vector& y, const Matrix& s, double step) {
  const auto n = static_cast<long>(1.0 / step + 0.5);
  double best_a = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (long i = 0; i <= n; ++i) {
    const double a = static_cast<double>(i) / static_cast<double>(n);
    const double obj = (y - a * s.col(0) - (1.0 - a) * s.col(1)).squaredNorm();
    if (obj < best) {
      best = obj;
      best_a = a;
    }
  }
  return best_a;
}

// Exact integer orientation.
inline long long orient_int(long long ax, long long ay, long long bx, long long by, long long cx, long long cy) {
  const long long v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
  return (v > 0) - (v < 0);
}

// Strict hull vertices of integer points: a location is a vertex unless it
// lies in a closed triangle (possibly degenerate) of three other locations.
// Duplicates are represented by their lowest index.
inline std::set<Eigen::Index> hull_vertices_bruteforce(const std::vector<std::pair<long long, long long>>& pts) {
  std::vector<Eigen::Index> reps;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dup = false;
    for (std::size_t j = 0; j < i; ++j) dup = dup || pts[j] == pts[i];
    if (!dup) reps.push_back(static_cast<Eigen::Index>(i));
  }
  auto in_closed_triangle = [&](std::size_t p, std::size_t a, std::size_t b, std::size_t c) {
    const auto& P = pts[p];
    const auto& A = pts[a];
    const auto& B = pts[b];
    const auto& C = pts[c];
    const long long d1 = orient_int(A.first, A.second, B.first, B.second, P.first, P.second);
    const long long d2 = orient_int(B.first, B.second, C.first, C.second, P.first, P.second);
    const long long d3 = orient_int(C.first, C.second, A.first, A.second, P.first, P.second);
    const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
    const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
    if (has_neg && has_pos) return false;
    if (has_neg || has_pos) return true;
    // All collinear: P must lie within the bounding box of the three points.
    const long long lox = std::min({A.first, B.first, C.first});
    const long long hix = std::max({A.first, B.first, C.first});
    const long long loy = std::min({A.second, B.second, C.second});
    const long long hiy = std::max({A.second, B.second, C.second});
    return P.first >= lox && P.first <= hix && P.second >= loy && P.second <= hiy;
  };
  std::set<Eigen::Index> out;
  if (reps.size() <= 2) {
    out.insert(reps.begin(), reps.end());
    return out;
  }
  for (const auto p : reps) {
    bool inside = false;
    for (std::size_t ia = 0; ia < reps.size() && !inside; ++ia) {
      for (std::size_t ib = ia; ib < reps.size() && !inside; ++ib) {
        for (std::size_t ic = ib; ic < reps.size() && !inside; ++ic) {
          const auto a = static_cast<std::size_t>(reps[ia]);
          const auto b = static_cast<std::size_t>(reps[ib]);
          const auto c = static_cast<std::size_t>(reps[ic]);
          const auto sp = static_cast<std::size_t>(p);
          if (a == sp || b == sp || c == sp) continue;
          inside = in_closed_triangle(sp, a, b, c);
        }
      }
    }
    if (!inside) out.insert(p);
  }
  return out;
}

}  // namespace kfosu::oracle

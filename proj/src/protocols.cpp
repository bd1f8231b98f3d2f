#include "kfosu/protocols.hpp"

#include "kfosu/csv_io.hpp"
#include "kfosu/hull.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace kfosu {

void AcquisitionOrder::validate(Eigen::Index n) const {
  std::vector<bool> seen(static_cast<std::size_t>(std::max<Eigen::Index>(n, 0)), false);
  for (const auto i : indices) {
    if (i < 0 || i >= n) throw ConfigError("order: index " + std::to_string(i) + " out of range");
    if (seen[static_cast<std::size_t>(i)]) throw ConfigError("order: duplicate index " + std::to_string(i));
    seen[static_cast<std::size_t>(i)] = true;
  }
}

AcquisitionOrder protocol_p1(Eigen::Index n, std::optional<std::uint64_t> shuffle_seed) {
  if (n < 1) throw ConfigError("protocol_p1: need n >= 1");
  AcquisitionOrder out;
  out.indices.resize(static_cast<std::size_t>(n));
  std::iota(out.indices.begin(), out.indices.end(), Eigen::Index{0});
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    std::shuffle(out.indices.begin(), out.indices.end(), rng);
  }
  out.n_essential = n;
  return out;
}

Matrix phasor_embedding(const Eigen::Ref<const Matrix>& spectra, const FourierBasis& basis) {
  if (spectra.cols() != basis.n_channels()) throw ConfigError("phasor_embedding: channel count mismatch");
  // Harmonic 1 is needed regardless of how many harmonics the basis keeps.
  const FourierBasis h1(basis.n_channels(), std::min<Eigen::Index>(2, FourierBasis::max_harmonics(basis.n_channels())));
  if (h1.n_harmonics() < 2) throw ConfigError("phasor_embedding: need at least 2 channels");
  Matrix out(spectra.rows(), 2);
  for (Eigen::Index i = 0; i < spectra.rows(); ++i) {
    // Dividing by the DC term keeps mixtures inside the convex hull of the
    // pure-spectrum phasors, so pure pixels stay hull vertices.
    const double total = spectra.row(i).sum();
    if (!(total > 0.0)) {
      out.row(i).setZero();
      continue;
    }
    out(i, 0) = h1.real_rows().row(1).dot(spectra.row(i)) / total;
    out(i, 1) = h1.imag_rows().row(1).dot(spectra.row(i)) / total;
  }
  return out;
}

namespace {

Eigen::Index nearest(const Matrix& centroids, const Eigen::Ref<const Eigen::RowVectorXd>& p, double* dist) {
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
    const double d = (centroids.row(j) - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

}  // namespace

KMeansResult kmeans(const Eigen::Ref<const Matrix>& points, Eigen::Index n_clusters, std::uint64_t seed,
                    int max_iters) {
  const Eigen::Index n = points.rows();
  if (n_clusters < 1) throw ConfigError("kmeans: need at least one cluster");
  if (n < n_clusters) throw ConfigError("kmeans: fewer points than clusters");
  std::mt19937_64 rng(seed);

  KMeansResult out;
  out.centroids.resize(n_clusters, points.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  out.centroids.row(0) = points.row(first(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index j = 1; j < n_clusters; ++j) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double d = 0.0;
      nearest(out.centroids.topRows(j), points.row(i), &d);
      d2[static_cast<std::size_t>(i)] = d;
      total += d;
    }
    Eigen::Index pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2[static_cast<std::size_t>(i)];
        if (target < 0.0 && d2[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    out.centroids.row(j) = points.row(pick);
  }

  out.labels.assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto label = nearest(out.centroids, points.row(i), &dist[static_cast<std::size_t>(i)]);
      if (label != out.labels[static_cast<std::size_t>(i)]) changed = true;
      out.labels[static_cast<std::size_t>(i)] = label;
    }
    out.iterations = iter + 1;
    if (!changed) break;
    Matrix sums = Matrix::Zero(n_clusters, points.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(n_clusters), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto label = out.labels[static_cast<std::size_t>(i)];
      sums.row(label) += points.row(i);
      ++counts[static_cast<std::size_t>(label)];
    }
    for (Eigen::Index j = 0; j < n_clusters; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) {
        out.centroids.row(j) = sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
        continue;
      }
      // Empty cluster: move it onto the worst-served point.
      const auto far = static_cast<Eigen::Index>(std::max_element(dist.begin(), dist.end()) - dist.begin());
      out.centroids.row(j) = points.row(far);
      dist[static_cast<std::size_t>(far)] = 0.0;
      out.labels[static_cast<std::size_t>(far)] = j;
    }
  }
  return out;
}

std::vector<Eigen::Index> peel_hulls(const Eigen::Ref<const Matrix>& phasors, Eigen::Index n_min) {
  std::vector<Eigen::Index> remaining(static_cast<std::size_t>(phasors.rows()));
  std::iota(remaining.begin(), remaining.end(), Eigen::Index{0});
  std::vector<Eigen::Index> collected;
  while (static_cast<Eigen::Index>(collected.size()) < n_min && !remaining.empty()) {
    Matrix pts(static_cast<Eigen::Index>(remaining.size()), 2);
    for (std::size_t i = 0; i < remaining.size(); ++i) pts.row(static_cast<Eigen::Index>(i)) = phasors.row(remaining[i]);
    const auto hull = convex_hull(pts);
    std::vector<bool> taken(remaining.size(), false);
    for (const auto h : hull) {
      collected.push_back(remaining[static_cast<std::size_t>(h)]);
      taken[static_cast<std::size_t>(h)] = true;
    }
    // Exact duplicates of a hull vertex sit on the same layer; peel them too so
    // every round removes the whole boundary.
    std::vector<Eigen::Index> next;
    next.reserve(remaining.size());
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (taken[i]) continue;
      bool duplicate = false;
      for (const auto h : hull) {
        if (pts.row(static_cast<Eigen::Index>(i)) == pts.row(h)) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) {
        collected.push_back(remaining[i]);
      } else {
        next.push_back(remaining[i]);
      }
    }
    remaining.swap(next);
  }
  return collected;
}

AcquisitionOrder protocol_p2(const Eigen::Ref<const Matrix>& spectra, const FourierBasis& basis,
                             const P2Config& config) {
  const Eigen::Index n = spectra.rows();
  if (config.n_clusters < 1) throw ConfigError("protocol_p2: need at least one cluster");
  if (config.n_essential < config.n_clusters) throw ConfigError("protocol_p2: need N_ess >= J");
  if (n < config.n_essential) throw ConfigError("protocol_p2: dataset smaller than N_ess");

  const Matrix z = phasor_embedding(spectra, basis);
  const bool degenerate = (z.rowwise() - z.row(0)).cwiseAbs().maxCoeff() == 0.0;
  if (degenerate) {
    AcquisitionOrder fallback = protocol_p1(n, config.seed);
    fallback.indices.resize(static_cast<std::size_t>(config.n_essential));
    fallback.n_essential = config.n_essential;
    fallback.warnings.push_back("protocol_p2: all phasor points coincide; using a shuffled P1 order");
    return fallback;
  }

  const auto candidates = peel_hulls(z, config.n_essential);
  const auto m = static_cast<Eigen::Index>(candidates.size());
  Matrix cz(m, 2);
  for (Eigen::Index i = 0; i < m; ++i) cz.row(i) = z.row(candidates[static_cast<std::size_t>(i)]);

  const Eigen::Index j_eff = std::min(config.n_clusters, m);
  const KMeansResult km = kmeans(cz, j_eff, config.seed);

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<bool> taken(static_cast<std::size_t>(m), false);
  const Eigen::Index target = std::min(config.n_essential, m);
  AcquisitionOrder out;
  Eigen::Index left = m;
  while (static_cast<Eigen::Index>(out.indices.size()) < target && left > 0) {
    std::vector<Eigen::Index> round;
    for (Eigen::Index j = 0; j < j_eff && left > 0; ++j) {
      Eigen::Index best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        const double d = (cz.row(i) - km.centroids.row(j)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      taken[static_cast<std::size_t>(best)] = true;
      --left;
      round.push_back(candidates[static_cast<std::size_t>(best)]);
    }
    std::shuffle(round.begin(), round.end(), rng);
    out.indices.insert(out.indices.end(), round.begin(), round.end());
  }
  out.indices.resize(static_cast<std::size_t>(target));
  out.n_essential = target;
  return out;
}

void save_order(const AcquisitionOrder& order, const std::filesystem::path& path) {
  std::vector<std::size_t> idx(order.indices.begin(), order.indices.end());
  save_index_csv(idx, path);
}

AcquisitionOrder load_order(const std::filesystem::path& path) {
  const auto idx = load_index_csv(path);
  AcquisitionOrder out;
  out.indices.assign(idx.begin(), idx.end());
  out.n_essential = static_cast<Eigen::Index>(out.indices.size());
  return out;
}

}  // namespace kfosu

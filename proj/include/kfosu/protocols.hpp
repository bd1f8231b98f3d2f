#pragma once

#include "kfosu/fourier.hpp"
#include "kfosu/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kfosu {

struct AcquisitionOrder {
  std::vector<Eigen::Index> indices;  // rows of the dataset, in acquisition order
  Eigen::Index n_essential = 0;       // equals indices.size()
  std::vector<std::string> warnings;

  /// Throws ConfigError unless the indices are distinct and lie in [0, n).
  void validate(Eigen::Index n) const;
};

struct P2Config {
  Eigen::Index n_essential = 340;
  Eigen::Index n_clusters = 50;
  std::uint64_t seed = 0;
};

/// Identity order over n spectra, or a uniform shuffle when a seed is given.
AcquisitionOrder protocol_p1(Eigen::Index n, std::optional<std::uint64_t> shuffle_seed = std::nullopt);

/// Phasor coordinates (n x 2): real and imaginary part of harmonic 1 of each
/// spectrum divided by its DC term (the channel sum). A mixture then maps to a
/// convex combination of the pure-spectrum phasors. Spectra whose sum is not
/// positive are mapped to the origin.
Matrix phasor_embedding(const Eigen::Ref<const Matrix>& spectra, const FourierBasis& basis);

struct KMeansResult {
  Matrix centroids;                    // J x d
  std::vector<Eigen::Index> labels;    // per point
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding on the rows of `points`. Stops at
/// an assignment fixpoint or after `max_iters` iterations; an empty cluster
/// is re-seeded with the point farthest from its current centroid.
KMeansResult kmeans(const Eigen::Ref<const Matrix>& points, Eigen::Index n_clusters, std::uint64_t seed,
                    int max_iters = 100);

/// Rows of the dataset collected by repeatedly peeling convex hulls of the
/// phasor points until at least `n_min` are gathered (or all are used).
/// Each layer is appended in hull order.
std::vector<Eigen::Index> peel_hulls(const Eigen::Ref<const Matrix>& phasors, Eigen::Index n_min);

/// Essential-pixel ordering: hull peeling in the phasor plane, k-means on the
/// candidates, then rounds taking the candidate nearest to each centroid in a
/// seeded random order. Returns exactly min(n_essential, candidates) indices.
AcquisitionOrder protocol_p2(const Eigen::Ref<const Matrix>& spectra, const FourierBasis& basis,
                             const P2Config& config);

void save_order(const AcquisitionOrder& order, const std::filesystem::path& path);
AcquisitionOrder load_order(const std::filesystem::path& path);

}  // namespace kfosu

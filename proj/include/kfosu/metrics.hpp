#pragma once

#include "kfosu/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace kfosu {

/// Figures of merit at one time index.
struct MetricRecord {
  long t = 0;
  double asad_deg = 0.0;
  double rmse = 0.0;
  double re = 0.0;
  double wall_ms = 0.0;
};

/// Spectral angle in degrees. Throws ConfigError for a zero vector.
double sad_degrees(const Eigen::Ref<const Vector>& estimate, const Eigen::Ref<const Vector>& truth);

/// K x K matrix of SAD(estimate_i, truth_j).
Matrix sad_matrix(const Eigen::Ref<const Matrix>& estimate, const Eigen::Ref<const Matrix>& truth);

/// Minimum-cost assignment on a square cost matrix (Hungarian method).
/// Entry k of the result is the row assigned to column k.
std::vector<Eigen::Index> min_cost_assignment(const Matrix& cost);

/// Permutation pi with estimate column pi[k] matched to truth column k,
/// minimizing the total SAD.
std::vector<Eigen::Index> align_components(const Eigen::Ref<const Matrix>& estimate,
                                           const Eigen::Ref<const Matrix>& truth);

/// Mean SAD after optimal alignment.
double asad_degrees(const Eigen::Ref<const Matrix>& estimate, const Eigen::Ref<const Matrix>& truth);

/// sqrt(||C_true - C_hat(:, pi)||_F^2 / (K N)).
double rmse_concentrations(const Eigen::Ref<const Matrix>& estimate, const Eigen::Ref<const Matrix>& truth,
                           const std::vector<Eigen::Index>& alignment);

/// ||Y - C S^T||_F / ||Y||_F with Y N x L, C N x K, S L x K.
double reconstruction_error(const Eigen::Ref<const Matrix>& spectra,
                            const Eigen::Ref<const Matrix>& concentrations,
                            const Eigen::Ref<const Matrix>& endmembers);

struct LowerBound {
  double value = 0.0;
  bool rank_deficient = false;  // rank(Y) < K; value is then 0
};

/// RE of the rank-K projection Y P P^T, P = leading K right singular vectors
/// of Y (no centering).
LowerBound pca_lower_bound(const Eigen::Ref<const Matrix>& spectra, Eigen::Index k);

/// Same bound with the column means removed before projecting and added back.
LowerBound pca_lower_bound_centered(const Eigen::Ref<const Matrix>& spectra, Eigen::Index k);

// Trace CSV with header `t,asad_deg,rmse,re,wall_ms`; metrics that were not
// evaluated are written as `nan`.
std::string format_metric_records(const std::vector<MetricRecord>& records);
void save_metric_records(const std::vector<MetricRecord>& records, const std::filesystem::path& path);
std::vector<MetricRecord> load_metric_records(const std::filesystem::path& path);

}  // namespace kfosu

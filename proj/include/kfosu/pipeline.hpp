#pragma once

#include "kfosu/abundance.hpp"
#include "kfosu/fourier.hpp"
#include "kfosu/kalman.hpp"
#include "kfosu/metrics.hpp"
#include "kfosu/protocols.hpp"
#include "kfosu/regression.hpp"
#include "kfosu/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kfosu {

enum class Updater { kalman, rls, dl };
enum class InitMethod { vca, provided };

Updater parse_updater(const std::string& name);
std::string to_string(Updater updater);

struct PipelineConfig {
  Eigen::Index n_endmembers = 3;
  Eigen::Index n_regressors = 30;  // P
  double eta = 87.0;               // percent of energy kept by the reduction
  double sigma_v2 = 1.0;
  double rho = 1.0;
  int admm_iters = 50;
  Updater updater = Updater::kalman;
  double rls_lambda = 1.0;
  InitMethod init = InitMethod::vca;
  Matrix provided_init;  // L x K, used with InitMethod::provided
  std::uint64_t seed = 0;

  // Fixes M instead of selecting it from eta.
  std::optional<Eigen::Index> num_harmonics;
  // Fixes sigma_e^2 instead of estimating it from the first P spectra.
  std::optional<double> sigma_e2;
  FclsConfig fcls;

  // Metrics every eval_stride steps (and at the last step).
  long eval_stride = 1;
  // RMSE and RE need abundances for every acquired spectrum; off leaves them NaN.
  bool abundance_metrics = true;
  // Off writes wall_ms = 0 so traces are byte-reproducible.
  bool record_timing = true;

  bool baseline_vca = false;
  bool baseline_mcr = false;
  long baseline_stride = 20;
  int mcr_max_iters = 60;

  void validate() const;
};

struct StepInfo {
  Vector concentrations;  // c_t against the endmembers before the update
  double wall_ms = 0.0;
};

/// On-the-fly unmixing state: Fourier basis, posterior over the reduced
/// endmembers, regressor cache and the current nonnegative estimate.
class KfOsu {
 public:
  /// Initializes from the first P spectra (rows of `first_spectra`).
  KfOsu(const Eigen::Ref<const Matrix>& first_spectra, const PipelineConfig& config);

  /// Processes one spectrum: abundances, reduction, filter update, ADMM
  /// regression, then the mean is overwritten by the reduced constrained
  /// estimate. The covariance is kept.
  StepInfo step(const Eigen::Ref<const Vector>& spectrum);

  const Matrix& endmembers() const { return endmembers_; }  // L x K, >= 0
  const FourierBasis& basis() const { return basis_; }
  const FilterState& state() const { return state_; }
  const RegressorSet& regressors() const { return *regressors_; }
  double sigma_e2() const { return sigma_e2_; }
  long t() const { return t_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  PipelineConfig config_;
  FourierBasis basis_;
  std::unique_ptr<RegressorSet> regressors_;
  FilterState state_;
  DlState dl_state_;
  Matrix endmembers_;
  double sigma_e2_ = 1.0;
  long t_ = 0;
  std::vector<std::string> warnings_;
};

struct RunTrace {
  std::vector<MetricRecord> records;
  std::vector<MetricRecord> vca_records;
  std::vector<MetricRecord> mcr_records;
  Matrix endmembers;      // final S (L x K)
  Matrix concentrations;  // abundances of every processed spectrum vs the final S
  Eigen::Index n_harmonics = 0;
  double sigma_e2 = 0.0;
  bool aborted = false;
  std::string error;
  std::vector<std::string> warnings;
  PipelineConfig config;
};

/// aSAD that scores an all-zero estimated column as 90 degrees instead of
/// throwing.
double asad_or_orthogonal(const Eigen::Ref<const Matrix>& estimate, const Eigen::Ref<const Matrix>& truth);

/// Streams the dataset in the given order: initialization on the first P
/// ordered spectra, then one step per remaining spectrum. Numerical failures
/// stop the stream and are reported through `aborted`/`error` with the
/// records gathered so far.
RunTrace run_experiment(const DatasetBundle& dataset, const AcquisitionOrder& order, const PipelineConfig& config);

}  // namespace kfosu

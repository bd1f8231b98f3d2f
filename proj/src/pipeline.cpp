#include "kfosu/pipeline.hpp"

#include "kfosu/mcr_als.hpp"
#include "kfosu/synth.hpp"
#include "kfosu/vca.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace kfosu {

Updater parse_updater(const std::string& name) {
  if (name == "kalman") return Updater::kalman;
  if (name == "rls") return Updater::rls;
  if (name == "dl") return Updater::dl;
  throw ConfigError("unknown updater '" + name + "' (expected kalman, rls or dl)");
}

std::string to_string(Updater updater) {
  switch (updater) {
    case Updater::kalman:
      return "kalman";
    case Updater::rls:
      return "rls";
    case Updater::dl:
      return "dl";
  }
  return "kalman";
}

void PipelineConfig::validate() const {
  if (n_endmembers < 1) throw ConfigError("config: K must be >= 1");
  if (n_regressors < n_endmembers) throw ConfigError("config: P must be >= K");
  if (!(eta > 0.0 && eta <= 100.0)) throw ConfigError("config: eta must lie in (0, 100]");
  if (!(sigma_v2 >= 0.0) || !std::isfinite(sigma_v2)) throw ConfigError("config: sigma_v2 must be finite and >= 0");
  if (!(rho > 0.0)) throw ConfigError("config: rho must be positive");
  if (admm_iters < 1) throw ConfigError("config: admm_iters must be >= 1");
  if (updater == Updater::rls && !(rls_lambda > 0.0 && rls_lambda <= 1.0)) {
    throw ConfigError("config: RLS forgetting factor must lie in (0, 1]");
  }
  if (num_harmonics && *num_harmonics < 1) throw ConfigError("config: num_harmonics must be >= 1");
  if (sigma_e2 && !(*sigma_e2 > 0.0)) throw ConfigError("config: sigma_e2 must be positive");
  if (eval_stride < 1) throw ConfigError("config: eval_stride must be >= 1");
  if (baseline_stride < 1) throw ConfigError("config: baseline_stride must be >= 1");
  if (init == InitMethod::provided && provided_init.cols() != n_endmembers) {
    throw ConfigError("config: provided init must have K columns");
  }
}

namespace {

Eigen::Index choose_harmonics(const Eigen::Ref<const Matrix>& first, const PipelineConfig& config) {
  if (config.num_harmonics) {
    if (*config.num_harmonics > FourierBasis::max_harmonics(first.cols())) {
      throw ConfigError("config: num_harmonics exceeds floor(L/2)+1");
    }
    return *config.num_harmonics;
  }
  return select_num_harmonics(first, config.eta);
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

KfOsu::KfOsu(const Eigen::Ref<const Matrix>& first_spectra, const PipelineConfig& config)
    : config_(config),
      basis_(first_spectra.cols(), (config.validate(), choose_harmonics(first_spectra, config))) {
  const Eigen::Index p = first_spectra.rows();
  const Eigen::Index k = config.n_endmembers;
  if (p != config.n_regressors) {
    throw ConfigError("init: expected exactly P = " + std::to_string(config.n_regressors) + " spectra");
  }

  sigma_e2_ = config.sigma_e2 ? *config.sigma_e2 : estimate_noise_variance(first_spectra);
  if (!(sigma_e2_ > 0.0)) {
    // A noiseless start leaves the filter without an observation scale.
    sigma_e2_ = 1e-12 * std::max(first_spectra.squaredNorm() / static_cast<double>(first_spectra.size()), 1e-300);
    warnings_.push_back("init: estimated noise variance is zero, using a tiny floor");
  }

  if (config.init == InitMethod::provided) {
    if (config.provided_init.rows() != first_spectra.cols()) throw ConfigError("init: provided endmembers have wrong L");
    endmembers_ = config.provided_init;
  } else {
    VcaConfig vc;
    vc.n_endmembers = k;
    vc.seed = config.seed;
    VcaResult v = vca(first_spectra, vc);
    for (auto& w : v.warnings) warnings_.push_back(std::move(w));
    endmembers_ = std::move(v.endmembers);
  }
  if (endmembers_.minCoeff() < 0.0) throw ConfigError("init: endmembers must be nonnegative");

  regressors_ = std::make_unique<RegressorSet>(first_spectra, basis_, config.rho);
  if (regressors_->ill_conditioned()) warnings_.push_back("init: regression system is ill-conditioned");

  const Matrix reduced = basis_.reduce_columns(endmembers_);
  state_ = FilterState::from_reduced(reduced, config.sigma_v2, p);
  if (config.updater == Updater::dl) {
    // Gram accumulator seeded with the abundances of the initialization spectra.
    const Matrix c0 = estimate_concentrations(first_spectra, endmembers_, config.fcls);
    dl_state_ = DlState::from_reduced(reduced, c0.transpose() * c0, p);
  }
  t_ = p;
}

StepInfo KfOsu::step(const Eigen::Ref<const Vector>& spectrum) {
  if (spectrum.size() != basis_.n_channels()) throw ConfigError("step: spectrum length mismatch");
  const auto start = std::chrono::steady_clock::now();
  StepInfo info;

  info.concentrations = FclsSolver(endmembers_, config_.fcls).solve(spectrum).concentrations;
  const Vector reduced = basis_.reduce(spectrum);

  Matrix target;
  switch (config_.updater) {
    case Updater::kalman:
      state_ = kf_update(state_, reduced, info.concentrations, NoiseConfig{config_.sigma_v2, sigma_e2_});
      target = state_.unvec();
      break;
    case Updater::rls:
      state_ = rls_update(state_, reduced, info.concentrations, config_.rls_lambda);
      target = state_.unvec();
      break;
    case Updater::dl:
      dl_state_ = dl_update(dl_state_, reduced, info.concentrations);
      target = dl_state_.unvec();
      break;
  }

  AdmmConfig admm;
  admm.rho = config_.rho;
  admm.max_iters = config_.admm_iters;
  const RegressionResult reg = solve_regression(*regressors_, target, admm);
  endmembers_ = reg.endmembers;

  const Matrix constrained = basis_.reduce_columns(endmembers_);
  if (config_.updater == Updater::dl) {
    dl_state_.set_mean(constrained);
  } else {
    state_.set_mean(constrained);
  }
  ++t_;
  info.wall_ms = config_.record_timing ? elapsed_ms(start) : 0.0;
  return info;
}

double asad_or_orthogonal(const Eigen::Ref<const Matrix>& estimate, const Eigen::Ref<const Matrix>& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw ConfigError("asad: shape mismatch");
  }
  const Eigen::Index k = truth.cols();
  Matrix cost(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const bool null_col = !(estimate.col(i).norm() > 0.0);
    for (Eigen::Index j = 0; j < k; ++j) cost(i, j) = null_col ? 90.0 : sad_degrees(estimate.col(i), truth.col(j));
  }
  const auto pi = min_cost_assignment(cost);
  double total = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) total += cost(pi[static_cast<std::size_t>(j)], j);
  return total / static_cast<double>(k);
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix ordered_rows(const Matrix& m, const std::vector<Eigen::Index>& order, Eigen::Index count) {
  Matrix out(count, m.cols());
  for (Eigen::Index i = 0; i < count; ++i) out.row(i) = m.row(order[static_cast<std::size_t>(i)]);
  return out;
}

// Fills asad/rmse/re of `rec` for estimate `s` against the first t ordered spectra.
void evaluate(MetricRecord& rec, const Matrix& s, const DatasetBundle& data, const std::vector<Eigen::Index>& order,
              Eigen::Index t, const PipelineConfig& config) {
  rec.asad_deg = kNaN;
  rec.rmse = kNaN;
  rec.re = kNaN;
  if (data.endmembers) rec.asad_deg = asad_or_orthogonal(s, data.endmembers->values());
  if (!config.abundance_metrics) return;
  const Matrix y = ordered_rows(data.spectra.values(), order, t);
  const Matrix c = estimate_concentrations(y, s, config.fcls);
  rec.re = reconstruction_error(y, c, s);
  if (data.concentrations && data.endmembers) {
    const Matrix truth = ordered_rows(data.concentrations->values(), order, t);
    bool null_col = false;
    for (Eigen::Index j = 0; j < s.cols(); ++j) null_col = null_col || !(s.col(j).norm() > 0.0);
    if (!null_col) rec.rmse = rmse_concentrations(c, truth, align_components(s, data.endmembers->values()));
  }
}

}  // namespace

RunTrace run_experiment(const DatasetBundle& dataset, const AcquisitionOrder& order, const PipelineConfig& config) {
  config.validate();
  dataset.validate();
  const Eigen::Index n_total = dataset.spectra.values().rows();
  order.validate(n_total);
  const auto n = static_cast<Eigen::Index>(order.indices.size());
  const Eigen::Index p = config.n_regressors;
  if (n <= p) throw ConfigError("run: the order must contain more than P spectra");
  if (dataset.endmembers && dataset.endmembers->n_endmembers() != config.n_endmembers) {
    throw ConfigError("run: ground truth has a different number of endmembers");
  }

  RunTrace trace;
  trace.config = config;
  const Matrix& y_all = dataset.spectra.values();
  const Matrix first = ordered_rows(y_all, order.indices, p);

  std::unique_ptr<KfOsu> engine;
  try {
    engine = std::make_unique<KfOsu>(first, config);
  } catch (const NumericalError& e) {
    trace.aborted = true;
    trace.error = e.what();
    return trace;
  }
  trace.n_harmonics = engine->basis().n_harmonics();
  trace.sigma_e2 = engine->sigma_e2();

  auto run_baselines = [&](Eigen::Index t) {
    if (!config.baseline_vca && !config.baseline_mcr) return;
    const Matrix y = ordered_rows(y_all, order.indices, t);
    if (config.baseline_vca) {
      const auto start = std::chrono::steady_clock::now();
      VcaConfig vc;
      vc.n_endmembers = config.n_endmembers;
      vc.seed = config.seed;
      const Matrix s = vca(y, vc).endmembers;
      MetricRecord rec;
      rec.t = t;
      rec.wall_ms = config.record_timing ? elapsed_ms(start) : 0.0;
      evaluate(rec, s, dataset, order.indices, t, config);
      trace.vca_records.push_back(rec);
    }
    if (config.baseline_mcr) {
      const auto start = std::chrono::steady_clock::now();
      McrConfig mc;
      mc.max_iters = config.mcr_max_iters;
      mc.fcls = config.fcls;
      mc.init = mcr_initial_endmembers(y, config.n_endmembers, config.seed);
      const McrResult r = mcr_als(y, mc);
      MetricRecord rec;
      rec.t = t;
      rec.wall_ms = config.record_timing ? elapsed_ms(start) : 0.0;
      evaluate(rec, r.endmembers, dataset, order.indices, t, config);
      trace.mcr_records.push_back(rec);
    }
  };

  Eigen::Index processed = p;
  try {
    for (Eigen::Index i = p; i < n; ++i) {
      const StepInfo info = engine->step(y_all.row(order.indices[static_cast<std::size_t>(i)]).transpose());
      processed = i + 1;
      const long t = static_cast<long>(processed);
      const bool last = processed == n;
      if ((t - p - 1) % config.eval_stride == 0 || last) {
        MetricRecord rec;
        rec.t = t;
        rec.wall_ms = info.wall_ms;
        evaluate(rec, engine->endmembers(), dataset, order.indices, processed, config);
        trace.records.push_back(rec);
      }
      if ((t - p) % config.baseline_stride == 0 || last) run_baselines(processed);
    }
  } catch (const NumericalError& e) {
    trace.aborted = true;
    trace.error = "step t=" + std::to_string(processed + 1) + ": " + e.what();
  }

  trace.endmembers = engine->endmembers();
  trace.warnings = engine->warnings();
  const Matrix y = ordered_rows(y_all, order.indices, processed);
  trace.concentrations = estimate_concentrations(y, trace.endmembers, config.fcls);
  return trace;
}

}  // namespace kfosu

#include "kfosu/csv_io.hpp"
#include "kfosu/fourier.hpp"
#include "kfosu/metrics.hpp"
#include "kfosu/pipeline.hpp"
#include "kfosu/protocols.hpp"
#include "kfosu/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace kfosu;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct SynthArgs {
  Eigen::Index n = 1000;
  Eigen::Index l = 200;
  Eigen::Index k = 3;
  double snr_db = 20.0;
  std::vector<double> alpha;
  std::optional<double> purity_cap;
  bool pure_pixels = false;
  double intensity = 1.0;
  std::optional<double> noise_variance;
  std::uint64_t seed = 0;
  std::string out;
};

struct OrderArgs {
  std::string protocol;
  std::string dataset;
  Eigen::Index n_ess = 340;
  Eigen::Index clusters = 50;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct RunArgs {
  std::string dataset;
  std::string order;
  std::optional<Eigen::Index> k;
  Eigen::Index p = 30;
  double eta = 87.0;
  double sigma_v2 = 1.0;
  double rho = 1.0;
  int admm_iters = 50;
  std::string updater = "kalman";
  double lambda = 1.0;
  std::string init_file;
  std::uint64_t seed = 0;
  std::optional<Eigen::Index> num_harmonics;
  std::optional<double> sigma_e2;
  long eval_stride = 1;
  bool no_abundance_metrics = false;
  bool no_timing = false;
  std::vector<std::string> baselines;
  long baseline_stride = 20;
  std::string out;
  std::string endmembers_out;
  std::string concentrations_out;
};

struct EvalArgs {
  std::vector<std::string> traces;
  std::string out;
};

struct BenchArgs {
  std::string dataset;
  int reps = 5;
  RunArgs run;
};

void add_pipeline_options(CLI::App* app, RunArgs& a) {
  app->add_option("--k", a.k, "Number of endmembers (default: from the dataset ground truth)");
  app->add_option("--p", a.p, "Number of regressor spectra P")->capture_default_str();
  app->add_option("--eta", a.eta, "Percent of energy kept by the Fourier reduction")->capture_default_str();
  app->add_option("--sigma-v2", a.sigma_v2, "Random-walk state variance")->capture_default_str();
  app->add_option("--rho", a.rho, "ADMM penalty")->capture_default_str();
  app->add_option("--admm-iters", a.admm_iters, "ADMM iterations per step")->capture_default_str();
  app->add_option("--updater", a.updater, "kalman, rls or dl")->capture_default_str();
  app->add_option("--lambda", a.lambda, "RLS forgetting factor")->capture_default_str();
  app->add_option("--init", a.init_file, "Initial endmembers CSV (L x K); VCA when omitted");
  app->add_option("--seed", a.seed, "Seed for VCA and baselines")->capture_default_str();
  app->add_option("--num-harmonics", a.num_harmonics, "Fix M instead of selecting it from eta");
  app->add_option("--sigma-e2", a.sigma_e2, "Fix the observation noise variance");
}

PipelineConfig make_config(const RunArgs& a, const DatasetBundle& data) {
  PipelineConfig cfg;
  if (a.k) {
    cfg.n_endmembers = *a.k;
  } else if (data.endmembers) {
    cfg.n_endmembers = data.endmembers->n_endmembers();
  } else {
    throw ConfigError("--k is required when the dataset has no ground-truth endmembers");
  }
  cfg.n_regressors = a.p;
  cfg.eta = a.eta;
  cfg.sigma_v2 = a.sigma_v2;
  cfg.rho = a.rho;
  cfg.admm_iters = a.admm_iters;
  cfg.updater = parse_updater(a.updater);
  cfg.rls_lambda = a.lambda;
  cfg.seed = a.seed;
  cfg.num_harmonics = a.num_harmonics;
  cfg.sigma_e2 = a.sigma_e2;
  cfg.eval_stride = a.eval_stride;
  cfg.abundance_metrics = !a.no_abundance_metrics;
  cfg.record_timing = !a.no_timing;
  cfg.baseline_stride = a.baseline_stride;
  for (const auto& b : a.baselines) {
    if (b == "vca") {
      cfg.baseline_vca = true;
    } else if (b == "mcr-als") {
      cfg.baseline_mcr = true;
    } else {
      throw ConfigError("unknown baseline '" + b + "' (expected vca or mcr-als)");
    }
  }
  if (!a.init_file.empty()) {
    cfg.init = InitMethod::provided;
    cfg.provided_init = load_matrix_csv(a.init_file);
  }
  return cfg;
}

fs::path sibling(const fs::path& trace, const std::string& suffix) {
  fs::path out = trace;
  out.replace_filename(trace.stem().string() + suffix + trace.extension().string());
  return out;
}

int cmd_synth(const SynthArgs& a) {
  SynthConfig cfg;
  cfg.n_spectra = a.n;
  cfg.n_channels = a.l;
  cfg.n_endmembers = a.k;
  cfg.snr_db = a.snr_db;
  if (a.alpha.size() == 1) {
    cfg.dirichlet_alpha = Vector::Constant(a.k, a.alpha.front());
  } else if (!a.alpha.empty()) {
    cfg.dirichlet_alpha = Eigen::Map<const Vector>(a.alpha.data(), static_cast<Eigen::Index>(a.alpha.size()));
  }
  cfg.purity_cap = a.purity_cap;
  cfg.plant_pure_pixels = a.pure_pixels;
  cfg.intensity_scale = a.intensity;
  cfg.noise_variance = a.noise_variance;
  cfg.seed = a.seed;
  const EndmemberMatrix s = generate_pure_spectra(a.l, a.k, cfg.peaks, a.seed);
  const DatasetBundle bundle = generate_dataset(s, cfg);
  save_dataset(bundle, a.out);
  std::cout << "wrote " << a.n << " spectra to " << a.out << " (noise variance "
            << format_double(bundle.noise_variance_true.value_or(0.0)) << ")\n";
  return 0;
}

int cmd_order(const OrderArgs& a) {
  AcquisitionOrder order;
  if (a.protocol == "p1") {
    const DatasetBundle data = load_dataset(a.dataset);
    order = protocol_p1(data.spectra.values().rows(), a.seed);
  } else if (a.protocol == "p2") {
    const DatasetBundle data = load_dataset(a.dataset);
    const Matrix& y = data.spectra.values();
    P2Config cfg;
    cfg.n_essential = a.n_ess;
    cfg.n_clusters = a.clusters;
    cfg.seed = a.seed.value_or(0);
    order = protocol_p2(y, FourierBasis(y.cols(), 2), cfg);
  } else {
    throw ConfigError("unknown protocol '" + a.protocol + "' (expected p1 or p2)");
  }
  for (const auto& w : order.warnings) std::cerr << "warning: " << w << "\n";
  save_order(order, a.out);
  std::cout << "wrote " << order.indices.size() << " indices to " << a.out << "\n";
  return 0;
}

int cmd_run(const RunArgs& a) {
  const DatasetBundle data = load_dataset(a.dataset);
  const AcquisitionOrder order =
      a.order.empty() ? protocol_p1(data.spectra.values().rows()) : load_order(a.order);
  const PipelineConfig cfg = make_config(a, data);
  const RunTrace trace = run_experiment(data, order, cfg);
  for (const auto& w : trace.warnings) std::cerr << "warning: " << w << "\n";

  const fs::path out(a.out);
  save_metric_records(trace.records, out);
  if (cfg.baseline_vca) save_metric_records(trace.vca_records, sibling(out, "_vca"));
  if (cfg.baseline_mcr) save_metric_records(trace.mcr_records, sibling(out, "_mcr-als"));
  if (!a.endmembers_out.empty()) save_matrix_csv(trace.endmembers, a.endmembers_out);
  if (!a.concentrations_out.empty()) save_matrix_csv(trace.concentrations, a.concentrations_out);

  if (trace.aborted) {
    std::cerr << "numerical failure: " << trace.error << " (partial trace written)\n";
    return kExitNumerical;
  }
  std::cout << "M=" << trace.n_harmonics << " sigma_e2=" << format_double(trace.sigma_e2) << " steps="
            << trace.records.size() << "\n";
  return 0;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

int cmd_eval(const EvalArgs& a) {
  // Per-t running sums over the traces that report t; NaN entries are skipped.
  struct Acc {
    double sum[4] = {0, 0, 0, 0};
    double sq[4] = {0, 0, 0, 0};
    long count[4] = {0, 0, 0, 0};
  };
  std::map<long, Acc> acc;
  for (const auto& path : a.traces) {
    for (const auto& r : load_metric_records(path)) {
      const double v[4] = {r.asad_deg, r.rmse, r.re, r.wall_ms};
      Acc& slot = acc[r.t];
      for (int i = 0; i < 4; ++i) {
        if (std::isnan(v[i])) continue;
        slot.sum[i] += v[i];
        slot.sq[i] += v[i] * v[i];
        ++slot.count[i];
      }
    }
  }
  std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + a.out);
  out << "t,n,asad_mean,asad_std,rmse_mean,rmse_std,re_mean,re_std,wall_ms_mean,wall_ms_std";
  for (const auto& [t, s] : acc) {
    out << "\n" << t << "," << *std::max_element(std::begin(s.count), std::end(s.count));
    for (int i = 0; i < 4; ++i) {
      const double n = static_cast<double>(s.count[i]);
      const double mean = n > 0 ? s.sum[i] / n : std::nan("");
      const double var = n > 1 ? std::max(0.0, (s.sq[i] - n * mean * mean) / (n - 1.0)) : (n == 1 ? 0.0 : std::nan(""));
      out << "," << format_double(mean) << "," << format_double(std::sqrt(var));
    }
  }
  if (!out) throw IoError("write failed for " + a.out);
  std::cout << "summarized " << a.traces.size() << " traces over " << acc.size() << " time indices\n";
  return 0;
}

int cmd_bench(BenchArgs& a) {
  if (a.reps < 1) throw ConfigError("--reps must be >= 1");
  const DatasetBundle data = load_dataset(a.dataset);
  const AcquisitionOrder order = protocol_p1(data.spectra.values().rows());
  a.run.no_abundance_metrics = true;
  PipelineConfig cfg = make_config(a.run, data);
  cfg.record_timing = true;
  std::vector<double> all;
  for (int rep = 0; rep < a.reps; ++rep) {
    const RunTrace trace = run_experiment(data, order, cfg);
    if (trace.aborted) {
      std::cerr << "numerical failure: " << trace.error << "\n";
      return kExitNumerical;
    }
    std::vector<double> ms;
    for (const auto& r : trace.records) ms.push_back(r.wall_ms);
    all.insert(all.end(), ms.begin(), ms.end());
    std::cout << "rep " << rep << ": steps=" << ms.size() << " median_ms=" << quantile(ms, 0.5)
              << " p95_ms=" << quantile(ms, 0.95) << " M=" << trace.n_harmonics << "\n";
  }
  std::cout << "overall: median_ms=" << quantile(all, 0.5) << " p95_ms=" << quantile(all, 0.95) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"On-the-fly spectral unmixing with a Kalman filter in a truncated Fourier subspace"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic dataset directory");
  s->add_option("--n", synth.n, "Number of spectra")->capture_default_str();
  s->add_option("--l", synth.l, "Number of channels")->capture_default_str();
  s->add_option("--k", synth.k, "Number of endmembers")->capture_default_str();
  s->add_option("--snr-db", synth.snr_db, "Signal-to-noise ratio in dB (inf for none)")->capture_default_str();
  s->add_option("--alpha", synth.alpha, "Dirichlet parameter (one value or K values)");
  s->add_option("--purity-cap", synth.purity_cap, "Reject abundance rows whose maximum exceeds the cap");
  s->add_flag("--pure-pixels", synth.pure_pixels, "Plant one pure pixel per endmember");
  s->add_option("--intensity", synth.intensity, "Scale of the pure spectra")->capture_default_str();
  s->add_option("--noise-variance", synth.noise_variance,
                "Choose the intensity so the noise has this variance at the given SNR");
  s->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  s->add_option("--out", synth.out, "Output directory")->required();

  OrderArgs ord;
  auto* o = app.add_subcommand("order", "Build an acquisition order");
  o->add_option("protocol", ord.protocol, "p1 or p2")->required();
  o->add_option("--dataset", ord.dataset, "Dataset directory")->required();
  o->add_option("--n-ess", ord.n_ess, "Number of essential spectra (p2)")->capture_default_str();
  o->add_option("--clusters", ord.clusters, "Number of clusters (p2)")->capture_default_str();
  o->add_option("--seed", ord.seed, "Shuffle seed (p1: shuffle only when given)");
  o->add_option("--out", ord.out, "Output order CSV")->required();

  RunArgs run;
  auto* r = app.add_subcommand("run", "Stream a dataset through the unmixing pipeline");
  r->add_option("--dataset", run.dataset, "Dataset directory")->required();
  r->add_option("--order", run.order, "Order CSV (identity when omitted)");
  add_pipeline_options(r, run);
  r->add_option("--eval-stride", run.eval_stride, "Evaluate metrics every n steps")->capture_default_str();
  r->add_flag("--no-abundance-metrics", run.no_abundance_metrics, "Skip RMSE and RE");
  r->add_flag("--no-timing", run.no_timing, "Write wall_ms as 0 for reproducible traces");
  r->add_option("--baseline", run.baselines, "Baseline to run alongside: vca, mcr-als");
  r->add_option("--baseline-stride", run.baseline_stride, "Baseline re-run cadence")->capture_default_str();
  r->add_option("--out", run.out, "Trace CSV")->required();
  r->add_option("--endmembers-out", run.endmembers_out, "Final endmembers CSV");
  r->add_option("--concentrations-out", run.concentrations_out, "Final abundances CSV");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Mean and standard deviation of traces per time index");
  e->add_option("--traces", ev.traces, "Trace CSV files")->required();
  e->add_option("--out", ev.out, "Summary CSV")->required();

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Per-step timing report");
  b->add_option("--dataset", bench.dataset, "Dataset directory")->required();
  b->add_option("--reps", bench.reps, "Repetitions")->capture_default_str();
  add_pipeline_options(b, bench.run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*o) return cmd_order(ord);
    if (*r) return cmd_run(run);
    if (*e) return cmd_eval(ev);
    if (*b) return cmd_bench(bench);
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return kExitNumerical;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitConfig;
  }
  return 0;
}

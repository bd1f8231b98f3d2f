#include "kfosu/synth.hpp"

#include "kfosu/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace kfosu {

namespace {

Vector random_peak_spectrum(Eigen::Index l, const PeakSpec& spec, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(spec.min_peaks, spec.max_peaks);
  std::uniform_real_distribution<double> center(0.05 * static_cast<double>(l),
                                                0.95 * static_cast<double>(l));
  std::uniform_real_distribution<double> width(spec.min_width, spec.max_width);
  std::uniform_real_distribution<double> amplitude(0.2, 1.0);
  Vector s = Vector::Zero(l);
  const int peaks = count(rng);
  for (int p = 0; p < peaks; ++p) {
    const double mu = center(rng);
    const double sigma = width(rng);
    const double a = amplitude(rng);
    for (Eigen::Index i = 0; i < l; ++i) {
      const double z = (static_cast<double>(i) - mu) / sigma;
      s(i) += a * std::exp(-0.5 * z * z);
    }
  }
  return s / s.maxCoeff();
}

}  // namespace

EndmemberMatrix generate_pure_spectra(Eigen::Index n_channels, Eigen::Index n_endmembers,
                                      const PeakSpec& peaks, std::uint64_t seed) {
  if (n_endmembers < 1) throw ConfigError("generate_pure_spectra: need K >= 1");
  if (n_channels < 2) throw ConfigError("generate_pure_spectra: need L >= 2");
  if (peaks.min_peaks < 1 || peaks.max_peaks < peaks.min_peaks) {
    throw ConfigError("generate_pure_spectra: invalid peak count range");
  }
  if (!(peaks.min_width > 0.0) || peaks.max_width < peaks.min_width) {
    throw ConfigError("generate_pure_spectra: invalid peak width range");
  }
  constexpr double kMinSeparationDeg = 10.0;
  constexpr int kMaxAttempts = 100;

  std::mt19937_64 rng(seed);
  Matrix s(n_channels, n_endmembers);
  for (Eigen::Index k = 0; k < n_endmembers; ++k) {
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
      const Vector candidate = random_peak_spectrum(n_channels, peaks, rng);
      accepted = true;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (sad_degrees(candidate, s.col(j)) < kMinSeparationDeg) {
          accepted = false;
          break;
        }
      }
      if (accepted) s.col(k) = candidate;
    }
    if (!accepted) {
      throw NumericalError("generate_pure_spectra: could not separate endmember " + std::to_string(k) +
                           " by 10 degrees after 100 attempts");
    }
  }
  return EndmemberMatrix(std::move(s));
}

DatasetBundle generate_dataset(const EndmemberMatrix& endmembers, const SynthConfig& config) {
  const Eigen::Index n = config.n_spectra;
  const Eigen::Index k = endmembers.n_endmembers();
  if (n < 1) throw ConfigError("generate_dataset: need at least one spectrum");
  if (config.n_endmembers != k) throw ConfigError("generate_dataset: endmember count mismatch");
  if (config.n_channels != endmembers.n_channels()) {
    throw ConfigError("generate_dataset: channel count mismatch");
  }
  Vector alpha = config.dirichlet_alpha.size() == 0 ? Vector::Ones(k) : config.dirichlet_alpha;
  if (alpha.size() != k || !(alpha.minCoeff() > 0.0)) {
    throw ConfigError("generate_dataset: Dirichlet parameter must have K positive entries");
  }
  if (config.purity_cap && !(*config.purity_cap > 0.0 && *config.purity_cap <= 1.0)) {
    throw ConfigError("generate_dataset: purity cap must lie in (0, 1]");
  }
  if (config.purity_cap && config.plant_pure_pixels) {
    throw ConfigError("generate_dataset: pure pixels cannot be planted under a purity cap");
  }
  if (config.plant_pure_pixels && n < k) {
    throw ConfigError("generate_dataset: too few spectra to plant the pure pixels");
  }
  if (!(config.intensity_scale > 0.0)) throw ConfigError("generate_dataset: intensity scale must be positive");
  if (std::isnan(config.snr_db)) throw ConfigError("generate_dataset: SNR is NaN");

  std::mt19937_64 rng(config.seed);
  std::vector<std::gamma_distribution<double>> gammas;
  for (Eigen::Index j = 0; j < k; ++j) gammas.emplace_back(alpha(j), 1.0);

  constexpr long kMaxDraws = 1'000'000;
  long draws = 0;
  Matrix c(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    while (true) {
      if (++draws > kMaxDraws) {
        throw NumericalError("generate_dataset: purity cap rejected more than 1e6 Dirichlet draws");
      }
      Vector g(k);
      for (Eigen::Index j = 0; j < k; ++j) g(j) = gammas[static_cast<std::size_t>(j)](rng);
      const double total = g.sum();
      if (!(total > 0.0)) continue;
      g /= total;
      if (config.purity_cap && g.maxCoeff() > *config.purity_cap) continue;
      c.row(i) = g.transpose();
      break;
    }
  }
  if (config.plant_pure_pixels) {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    std::shuffle(rows.begin(), rows.end(), rng);
    for (Eigen::Index j = 0; j < k; ++j) {
      c.row(rows[static_cast<std::size_t>(j)]) = Vector::Unit(k, j).transpose();
    }
  }

  double scale = config.intensity_scale;
  if (config.noise_variance) {
    if (!(*config.noise_variance > 0.0)) throw ConfigError("generate_dataset: noise variance must be positive");
    if (!std::isfinite(config.snr_db)) throw ConfigError("generate_dataset: a noise variance needs a finite SNR");
    const Matrix unit = c * endmembers.values().transpose();
    const double unit_sigma2 =
        unit.squaredNorm() / (static_cast<double>(unit.size()) * std::pow(10.0, config.snr_db / 10.0));
    scale = std::sqrt(*config.noise_variance / unit_sigma2);
  }
  const Matrix s = scale * endmembers.values();
  const Matrix clean = c * s.transpose();
  Matrix y = clean;
  double sigma2 = 0.0;
  if (std::isfinite(config.snr_db)) {
    sigma2 = clean.squaredNorm() /
             (static_cast<double>(clean.size()) * std::pow(10.0, config.snr_db / 10.0));
    std::normal_distribution<double> noise(0.0, std::sqrt(sigma2));
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (Eigen::Index j = 0; j < y.cols(); ++j) y(i, j) += noise(rng);
    }
  } else if (config.snr_db < 0.0) {
    throw ConfigError("generate_dataset: SNR of -inf dB");
  }

  DatasetBundle bundle{SpectraMatrix(std::move(y)), ConcentrationMatrix(std::move(c)),
                       EndmemberMatrix(s), sigma2, config.seed};
  bundle.validate();
  return bundle;
}

Matrix savitzky_golay_weights(int order, int window) {
  if (window < 1 || window % 2 == 0) throw ConfigError("savitzky_golay: window must be odd");
  if (order < 0 || window <= order) throw ConfigError("savitzky_golay: need window > order");
  const int half = window / 2;
  Matrix v(window, order + 1);
  for (int i = 0; i < window; ++i) {
    const double x = static_cast<double>(i - half);
    double p = 1.0;
    for (int j = 0; j <= order; ++j) {
      v(i, j) = p;
      p *= x;
    }
  }
  const Eigen::HouseholderQR<Matrix> qr(v);
  const Matrix q = qr.householderQ() * Matrix::Identity(window, order + 1);
  return q * q.transpose();
}

Vector savitzky_golay(const Eigen::Ref<const Vector>& y, int order, int window) {
  const Matrix h = savitzky_golay_weights(order, window);
  const Eigen::Index n = y.size();
  if (n < window) {
    throw ConfigError("savitzky_golay: signal length " + std::to_string(n) + " shorter than window " +
                      std::to_string(window));
  }
  const int half = window / 2;
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i < half) {
      out(i) = h.row(i).dot(y.head(window));
    } else if (i >= n - half) {
      out(i) = h.row(i - (n - window)).dot(y.tail(window));
    } else {
      out(i) = h.row(half).dot(y.segment(i - half, window));
    }
  }
  return out;
}

double estimate_noise_variance(const Eigen::Ref<const Matrix>& spectra, int segment_len) {
  if (spectra.rows() < 1) throw ConfigError("estimate_noise_variance: no spectra");
  if (segment_len < 2) throw ConfigError("estimate_noise_variance: segment length must be >= 2");
  const Eigen::Index l = spectra.cols();
  if (l < segment_len) {
    throw ConfigError("estimate_noise_variance: spectra shorter than one segment");
  }
  const Eigen::Index segments = l / segment_len;
  double acc = 0.0;
  std::vector<double> variances(static_cast<std::size_t>(segments));
  for (Eigen::Index p = 0; p < spectra.rows(); ++p) {
    const Vector y = spectra.row(p).transpose();
    const Vector residual = y - savitzky_golay(y, 3, 5);
    for (Eigen::Index q = 0; q < segments; ++q) {
      const auto seg = residual.segment(q * segment_len, segment_len);
      const double mean = seg.mean();
      variances[static_cast<std::size_t>(q)] =
          (seg.array() - mean).square().sum() / static_cast<double>(segment_len - 1);
    }
    std::sort(variances.begin(), variances.end());
    const auto mid = variances.size() / 2;
    const double median =
        variances.size() % 2 == 1 ? variances[mid] : 0.5 * (variances[mid - 1] + variances[mid]);
    acc += median;
  }
  return acc / static_cast<double>(spectra.rows());
}

}  // namespace kfosu

#pragma once

#include "kfosu/types.hpp"

#include <cstdint>
#include <limits>
#include <optional>

namespace kfosu {

/// Shape family of the synthetic pure spectra: sums of Gaussian peaks.
struct PeakSpec {
  int min_peaks = 3;
  int max_peaks = 8;
  double min_width = 2.0;  // Gaussian standard deviation, channels
  double max_width = 8.0;
};

struct SynthConfig {
  Eigen::Index n_spectra = 1000;
  Eigen::Index n_channels = 200;
  Eigen::Index n_endmembers = 3;
  // +infinity disables the noise.
  double snr_db = 20.0;
  // Empty: symmetric Dirichlet(1, ..., 1).
  Vector dirichlet_alpha;
  // Rows whose largest abundance exceeds the cap are redrawn (no near-pure pixels).
  std::optional<double> purity_cap;
  // Replace K random rows by the pure pixels e_1..e_K.
  bool plant_pure_pixels = false;
  // Multiplies the unit-maximum pure spectra before mixing.
  double intensity_scale = 1.0;
  // When set (and the SNR is finite), the intensity scale is chosen instead so
  // that the noise variance equals this value; the SNR is unchanged.
  std::optional<double> noise_variance;
  std::uint64_t seed = 0;
  PeakSpec peaks;
};

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

/// K smooth nonnegative spectra (L x K), each a sum of Gaussian peaks scaled
/// to unit maximum. Endmembers are redrawn (up to 100 attempts each) until
/// every pair is at least 10 degrees apart; throws NumericalError otherwise.
EndmemberMatrix generate_pure_spectra(Eigen::Index n_channels, Eigen::Index n_endmembers,
                                      const PeakSpec& peaks, std::uint64_t seed);

/// Linear-mixing replicate Y = C S^T + E with Dirichlet abundances and white
/// Gaussian noise set so that 10 log10(||C S^T||_F^2 / (N L sigma^2)) = snr_db.
/// `endmembers` are used as given, times `config.intensity_scale`.
DatasetBundle generate_dataset(const EndmemberMatrix& endmembers, const SynthConfig& config);

/// Least-squares polynomial smoothing. Interior samples use the centered fit;
/// the first and last half-window samples are evaluated from the fit over the
/// first and last full window.
Vector savitzky_golay(const Eigen::Ref<const Vector>& y, int order = 3, int window = 5);

/// The (window x window) projection whose row j evaluates the local
/// polynomial fit at window position j.
Matrix savitzky_golay_weights(int order, int window);

/// Noise variance from the Savitzky-Golay residual y - SG(y): per spectrum
/// the median over consecutive segments of length T of the sample variance
/// (denominator T - 1), then the mean over spectra (rows of `spectra`).
double estimate_noise_variance(const Eigen::Ref<const Matrix>& spectra, int segment_len = 10);

}  // namespace kfosu

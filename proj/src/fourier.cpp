#include "kfosu/fourier.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace kfosu {

FourierBasis::FourierBasis(Eigen::Index n_channels, Eigen::Index n_harmonics)
    : n_channels_(n_channels), n_harmonics_(n_harmonics) {
  if (n_channels < 2) throw ConfigError("FourierBasis: need at least two channels");
  if (n_harmonics < 1 || n_harmonics > max_harmonics(n_channels)) {
    throw ConfigError("FourierBasis: harmonic count " + std::to_string(n_harmonics) +
                      " outside [1, " + std::to_string(max_harmonics(n_channels)) + "]");
  }
  const Eigen::Index l = n_channels;
  const double norm = 1.0 / std::sqrt(static_cast<double>(l));
  real_rows_.resize(n_harmonics, l);
  imag_rows_.resize(n_harmonics, l);
  scale_.resize(n_harmonics);
  for (Eigen::Index k = 0; k < n_harmonics; ++k) {
    const bool self_conjugate = (k == 0) || (2 * k == l);
    scale_(k) = self_conjugate ? 1.0 : std::numbers::sqrt2;
    for (Eigen::Index n = 0; n < l; ++n) {
      // Reduce k*n modulo L first so the phase stays accurate for long spectra.
      const double phase =
          2.0 * std::numbers::pi * static_cast<double>((k * n) % l) / static_cast<double>(l);
      real_rows_(k, n) = scale_(k) * norm * std::cos(phase);
      imag_rows_(k, n) = self_conjugate ? 0.0 : -scale_(k) * norm * std::sin(phase);
    }
  }
  op_.resize(2 * n_harmonics, l);
  op_ << real_rows_, imag_rows_;
}

Vector FourierBasis::reduce(const Eigen::Ref<const Vector>& y) const {
  if (y.size() != n_channels_) {
    throw ConfigError("reduce: spectrum has " + std::to_string(y.size()) + " channels, basis expects " +
                      std::to_string(n_channels_));
  }
  return op_ * y;
}

Matrix FourierBasis::reduce_columns(const Eigen::Ref<const Matrix>& columns) const {
  if (columns.rows() != n_channels_) {
    throw ConfigError("reduce_columns: row count does not match basis channel count");
  }
  return op_ * columns;
}

Vector retained_energy_profile(const Eigen::Ref<const Matrix>& spectra) {
  if (spectra.rows() < 1) throw ConfigError("select_num_harmonics: no spectra");
  const Eigen::Index l = spectra.cols();
  const Eigen::Index m_max = FourierBasis::max_harmonics(l);
  const FourierBasis full(l, m_max);
  const Matrix reduced = full.reduce_columns(spectra.transpose());
  Vector profile(m_max);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < m_max; ++k) {
    acc += reduced.row(k).squaredNorm() + reduced.row(m_max + k).squaredNorm();
    profile(k) = acc;
  }
  return profile;
}

Eigen::Index select_num_harmonics(const Eigen::Ref<const Matrix>& spectra, double eta) {
  if (!(eta > 0.0 && eta <= 100.0)) throw ConfigError("select_num_harmonics: eta must lie in (0, 100]");
  const Vector profile = retained_energy_profile(spectra);
  const double total = spectra.squaredNorm();
  // Relative slack absorbs rounding in the full-spectrum sum, where retained
  // and total energy agree only to machine precision.
  const double target = (eta / 100.0) * total * (1.0 - 1e-12);
  for (Eigen::Index m = 0; m < profile.size(); ++m) {
    if (profile(m) >= target) return m + 1;
  }
  return profile.size();
}

}  // namespace kfosu

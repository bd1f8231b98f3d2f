#pragma once

#include "kfosu/types.hpp"

namespace kfosu {

/// Truncated real Fourier basis mapping an L-channel spectrum to 2M reduced
/// coordinates: the real parts of harmonics 0..M-1 followed by their
/// imaginary parts.
///
/// Normalization is unitary (1/sqrt(L)); every harmonic other than DC and
/// Nyquist carries an extra sqrt(2) so that the squared norm of a reduced
/// vector equals the energy of the one-sided spectrum it retains. With
/// M = floor(L/2) + 1 the map is an isometry onto its range (Parseval).
class FourierBasis {
 public:
  FourierBasis(Eigen::Index n_channels, Eigen::Index n_harmonics);

  Eigen::Index n_channels() const { return n_channels_; }
  Eigen::Index n_harmonics() const { return n_harmonics_; }
  Eigen::Index reduced_dim() const { return 2 * n_harmonics_; }

  /// Largest admissible harmonic count for L channels.
  static Eigen::Index max_harmonics(Eigen::Index n_channels) { return n_channels / 2 + 1; }

  /// Scaled real / imaginary analysis rows (M x L each).
  const Matrix& real_rows() const { return real_rows_; }
  const Matrix& imag_rows() const { return imag_rows_; }
  /// Per-harmonic weight applied on top of 1/sqrt(L) (1 or sqrt(2)).
  const Vector& scale() const { return scale_; }
  /// Stacked [real_rows; imag_rows], 2M x L.
  const Matrix& operator_matrix() const { return op_; }

  /// Reduce one spectrum (length L) to 2M coordinates.
  Vector reduce(const Eigen::Ref<const Vector>& y) const;
  /// Reduce every column of an L x Q matrix, giving 2M x Q.
  Matrix reduce_columns(const Eigen::Ref<const Matrix>& columns) const;

 private:
  Eigen::Index n_channels_;
  Eigen::Index n_harmonics_;
  Matrix real_rows_;
  Matrix imag_rows_;
  Vector scale_;
  Matrix op_;
};

/// Smallest M whose reduction keeps at least eta percent of the summed
/// squared norm of the given spectra (rows of `spectra`, P x L).
Eigen::Index select_num_harmonics(const Eigen::Ref<const Matrix>& spectra, double eta);

/// Retained energy sum_t ||reduce(y_t; M)||^2 for every M = 1..floor(L/2)+1
/// (entry M-1). Exposed for diagnostics and tests.
Vector retained_energy_profile(const Eigen::Ref<const Matrix>& spectra);

}  // namespace kfosu

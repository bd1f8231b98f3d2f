#pragma once

#include "kfosu/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kfosu {

struct VcaConfig {
  Eigen::Index n_endmembers = 1;
  std::uint64_t seed = 0;
  // Known SNR in dB; estimated from the data when unset.
  std::optional<double> snr_estimate;
};

struct VcaResult {
  Matrix endmembers;                  // L x K, selected rows of the input, clamped at 0
  std::vector<Eigen::Index> indices;  // selected row per endmember
  double snr_db = 0.0;                // SNR used for the projection choice
  bool projective = false;            // low-SNR branch (PCA onto K-1 dims plus offset)
  std::vector<std::string> warnings;
};

/// Vertex component analysis over the rows of `spectra` (N x L).
///
/// Projects onto a K-dimensional signal subspace (SVD), then repeatedly takes
/// the pixel with the largest |projection| on a random direction orthogonal
/// to the endmembers found so far. The projection switches to the zero-mean
/// PCA form when the SNR falls below 15 + 10 log10(K) dB. Singular vectors
/// are sign-normalized (largest entry positive) so the result does not depend
/// on the order of the rows. Equal projections resolve to the lowest row.
VcaResult vca(const Eigen::Ref<const Matrix>& spectra, const VcaConfig& config);

}  // namespace kfosu

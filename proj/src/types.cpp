#include "kfosu/types.hpp"

#include <cmath>
#include <string>

namespace kfosu {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw ConfigError(std::string(what) + ": non-finite entry");
  }
}

}  // namespace

SpectraMatrix::SpectraMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1) throw ConfigError("SpectraMatrix: need at least one pixel");
  if (values_.cols() < 2) throw ConfigError("SpectraMatrix: need at least two channels");
  require_finite(values_, "SpectraMatrix");
}

ConcentrationMatrix::ConcentrationMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw ConfigError("ConcentrationMatrix: empty matrix");
  }
  require_finite(values_, "ConcentrationMatrix");
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    if (values_.row(i).minCoeff() < -kNonnegTol) {
      throw ConfigError("ConcentrationMatrix: negative entry in row " + std::to_string(i));
    }
    if (std::abs(values_.row(i).sum() - 1.0) > kClosureTol) {
      throw ConfigError("ConcentrationMatrix: row " + std::to_string(i) +
                        " does not sum to one");
    }
  }
}

EndmemberMatrix::EndmemberMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw ConfigError("EndmemberMatrix: empty matrix");
  }
  require_finite(values_, "EndmemberMatrix");
  if (values_.minCoeff() < 0.0) throw ConfigError("EndmemberMatrix: negative entry");
  for (Eigen::Index k = 0; k < values_.cols(); ++k) {
    if (values_.col(k).maxCoeff() <= 0.0) {
      throw ConfigError("EndmemberMatrix: column " + std::to_string(k) + " is all zero");
    }
  }
}

void DatasetBundle::validate() const {
  const auto n = spectra.n_pixels();
  const auto l = spectra.n_channels();
  if (concentrations && concentrations->n_pixels() != n) {
    throw ConfigError("DatasetBundle: concentration rows do not match spectra");
  }
  if (endmembers && endmembers->n_channels() != l) {
    throw ConfigError("DatasetBundle: endmember rows do not match channel count");
  }
  if (concentrations && endmembers &&
      concentrations->n_endmembers() != endmembers->n_endmembers()) {
    throw ConfigError("DatasetBundle: inconsistent endmember count");
  }
  if (noise_variance_true && *noise_variance_true < 0.0) {
    throw ConfigError("DatasetBundle: negative noise variance");
  }
}

}  // namespace kfosu

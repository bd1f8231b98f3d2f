#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace kfosu {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Global tolerances shared by the domain types.
inline constexpr double kNonnegTol = 1e-9;
inline constexpr double kClosureTol = 1e-6;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: out-of-range parameters, malformed files, dimension mismatch.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A numerical routine hit a degenerate configuration (singular system, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Measured spectra, one pixel per row (N x L).
class SpectraMatrix {
 public:
  explicit SpectraMatrix(Matrix values);

  const Matrix& values() const { return values_; }
  Eigen::Index n_pixels() const { return values_.rows(); }
  Eigen::Index n_channels() const { return values_.cols(); }

 private:
  Matrix values_;
};

/// Abundances, one pixel per row (N x K); rows lie on the unit simplex.
class ConcentrationMatrix {
 public:
  explicit ConcentrationMatrix(Matrix values);

  const Matrix& values() const { return values_; }
  Eigen::Index n_pixels() const { return values_.rows(); }
  Eigen::Index n_endmembers() const { return values_.cols(); }

 private:
  Matrix values_;
};

/// Nonnegative pure spectra, one endmember per column (L x K).
class EndmemberMatrix {
 public:
  explicit EndmemberMatrix(Matrix values);

  const Matrix& values() const { return values_; }
  Eigen::Index n_channels() const { return values_.rows(); }
  Eigen::Index n_endmembers() const { return values_.cols(); }

 private:
  Matrix values_;
};

/// One synthetic (or loaded) replicate: spectra plus optional ground truth.
struct DatasetBundle {
  SpectraMatrix spectra;
  std::optional<ConcentrationMatrix> concentrations;
  std::optional<EndmemberMatrix> endmembers;
  std::optional<double> noise_variance_true;
  std::uint64_t seed = 0;

  // Throws ConfigError when ground-truth shapes disagree with the spectra.
  void validate() const;
};

}  // namespace kfosu

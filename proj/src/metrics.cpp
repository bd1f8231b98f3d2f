#include "kfosu/metrics.hpp"

#include "kfosu/csv_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace kfosu {

double sad_degrees(const Eigen::Ref<const Vector>& estimate, const Eigen::Ref<const Vector>& truth) {
  if (estimate.size() != truth.size()) throw ConfigError("sad: length mismatch");
  const double ne = estimate.norm();
  const double nt = truth.norm();
  if (!(ne > 0.0) || !(nt > 0.0)) throw ConfigError("sad: zero vector");
  const double cosine = std::clamp(estimate.dot(truth) / (ne * nt), -1.0, 1.0);
  return std::acos(cosine) * 180.0 / std::numbers::pi;
}

Matrix sad_matrix(const Eigen::Ref<const Matrix>& estimate, const Eigen::Ref<const Matrix>& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw ConfigError("sad_matrix: shape mismatch");
  }
  Matrix cost(estimate.cols(), truth.cols());
  for (Eigen::Index i = 0; i < estimate.cols(); ++i) {
    for (Eigen::Index j = 0; j < truth.cols(); ++j) cost(i, j) = sad_degrees(estimate.col(i), truth.col(j));
  }
  return cost;
}

std::vector<Eigen::Index> min_cost_assignment(const Matrix& cost) {
  const Eigen::Index n = cost.rows();
  if (cost.cols() != n) throw ConfigError("min_cost_assignment: cost matrix must be square");
  // Potentials-based Hungarian method, 1-based with a sentinel column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Eigen::Index> match(static_cast<std::size_t>(n + 1), 0);  // column -> row
  std::vector<Eigen::Index> way(static_cast<std::size_t>(n + 1), 0);
  for (Eigen::Index row = 1; row <= n; ++row) {
    match[0] = row;
    Eigen::Index col0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(col0)] = true;
      const Eigen::Index row0 = match[static_cast<std::size_t>(col0)];
      double delta = inf;
      Eigen::Index col1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) continue;
        const double cur = cost(row0 - 1, j - 1) - u[static_cast<std::size_t>(row0)] - v[sj];
        if (cur < minv[sj]) {
          minv[sj] = cur;
          way[sj] = col0;
        }
        if (minv[sj] < delta) {
          delta = minv[sj];
          col1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(match[sj])] += delta;
          v[sj] -= delta;
        } else {
          minv[sj] -= delta;
        }
      }
      col0 = col1;
    } while (match[static_cast<std::size_t>(col0)] != 0);
    do {
      const Eigen::Index col1 = way[static_cast<std::size_t>(col0)];
      match[static_cast<std::size_t>(col0)] = match[static_cast<std::size_t>(col1)];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<Eigen::Index> out(static_cast<std::size_t>(n));
  for (Eigen::Index j = 1; j <= n; ++j) out[static_cast<std::size_t>(j - 1)] = match[static_cast<std::size_t>(j)] - 1;
  return out;
}

std::vector<Eigen::Index> align_components(const Eigen::Ref<const Matrix>& estimate,
                                           const Eigen::Ref<const Matrix>& truth) {
  return min_cost_assignment(sad_matrix(estimate, truth));
}

double asad_degrees(const Eigen::Ref<const Matrix>& estimate, const Eigen::Ref<const Matrix>& truth) {
  const Matrix cost = sad_matrix(estimate, truth);
  const auto pi = min_cost_assignment(cost);
  double total = 0.0;
  for (Eigen::Index k = 0; k < cost.cols(); ++k) total += cost(pi[static_cast<std::size_t>(k)], k);
  return total / static_cast<double>(cost.cols());
}

double rmse_concentrations(const Eigen::Ref<const Matrix>& estimate, const Eigen::Ref<const Matrix>& truth,
                           const std::vector<Eigen::Index>& alignment) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw ConfigError("rmse_concentrations: shape mismatch");
  }
  if (static_cast<Eigen::Index>(alignment.size()) != truth.cols()) {
    throw ConfigError("rmse_concentrations: alignment length must equal K");
  }
  double acc = 0.0;
  for (Eigen::Index k = 0; k < truth.cols(); ++k) {
    acc += (truth.col(k) - estimate.col(alignment[static_cast<std::size_t>(k)])).squaredNorm();
  }
  return std::sqrt(acc / static_cast<double>(truth.size()));
}

double reconstruction_error(const Eigen::Ref<const Matrix>& spectra,
                            const Eigen::Ref<const Matrix>& concentrations,
                            const Eigen::Ref<const Matrix>& endmembers) {
  if (concentrations.rows() != spectra.rows() || endmembers.rows() != spectra.cols() ||
      concentrations.cols() != endmembers.cols()) {
    throw ConfigError("reconstruction_error: inconsistent shapes");
  }
  const double denom = spectra.norm();
  if (!(denom > 0.0)) throw ConfigError("reconstruction_error: spectra are all zero");
  return (spectra - concentrations * endmembers.transpose()).norm() / denom;
}

namespace {

LowerBound projection_bound(const Matrix& data, const Matrix& reference, Eigen::Index k) {
  const Eigen::Index l = data.cols();
  if (k < 1) throw ConfigError("pca_lower_bound: need K >= 1");
  if (data.rows() < k) throw ConfigError("pca_lower_bound: need N >= K");
  const double denom = reference.norm();
  if (!(denom > 0.0)) throw ConfigError("pca_lower_bound: spectra are all zero");
  LowerBound out;
  if (k >= l) return out;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(data.transpose() * data);
  const double top = std::max(eig.eigenvalues()(l - 1), 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < l; ++i) {
    if (eig.eigenvalues()(i) > 1e-12 * top) ++rank;
  }
  if (rank < k) {
    out.rank_deficient = true;
    return out;
  }
  const Matrix loadings = eig.eigenvectors().rightCols(k);
  out.value = (data - data * loadings * loadings.transpose()).norm() / denom;
  return out;
}

}  // namespace

LowerBound pca_lower_bound(const Eigen::Ref<const Matrix>& spectra, Eigen::Index k) {
  const Matrix y = spectra;
  return projection_bound(y, y, k);
}

LowerBound pca_lower_bound_centered(const Eigen::Ref<const Matrix>& spectra, Eigen::Index k) {
  const Matrix y = spectra;
  const Matrix centered = y.rowwise() - y.colwise().mean();
  return projection_bound(centered, y, k);
}

std::string format_metric_records(const std::vector<MetricRecord>& records) {
  std::string out = "t,asad_deg,rmse,re,wall_ms";
  for (const auto& r : records) {
    out += '\n';
    out += std::to_string(r.t) + "," + format_double(r.asad_deg) + "," + format_double(r.rmse) + "," +
           format_double(r.re) + "," + format_double(r.wall_ms);
  }
  return out;
}

void save_metric_records(const std::vector<MetricRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_metric_records(records);
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<MetricRecord> load_metric_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::vector<MetricRecord> out;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "t,asad_deg,rmse,re,wall_ms") {
        throw IoError(path.string() + ":1: expected header 't,asad_deg,rmse,re,wall_ms'");
      }
      continue;
    }
    std::string text = line;
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream fields(text);
    MetricRecord r;
    std::string tok[5];
    for (auto& t : tok) {
      if (!(fields >> t)) throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 5 fields");
    }
    try {
      r.t = std::stol(tok[0]);
      r.asad_deg = std::stod(tok[1]);
      r.rmse = std::stod(tok[2]);
      r.re = std::stod(tok[3]);
      r.wall_ms = std::stod(tok[4]);
    } catch (const std::exception&) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": non-numeric field");
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace kfosu

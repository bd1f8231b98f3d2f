#include "kfosu/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

namespace kfosu {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line_no, const std::string& msg) {
  throw IoError(source + ":" + std::to_string(line_no) + ": " + msg);
}

double parse_double(std::string_view token, const std::string& source, std::size_t line_no) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (token.empty() || ec != std::errc() || ptr != last) {
    fail(source, line_no, "non-numeric token '" + std::string(token) + "'");
  }
  return value;
}

long parse_count(std::string_view token, const std::string& source, std::size_t line_no) {
  long value = 0;
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), last, value);
  if (token.empty() || ec != std::errc() || ptr != last || value < 0) {
    fail(source, line_no, "invalid shape token '" + std::string(token) + "'");
  }
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error("format_double: buffer too small");
  return std::string(buf, ptr);
}

std::string format_matrix_csv(const Matrix& matrix) {
  if (matrix.size() == 0) throw ConfigError("save_matrix_csv: empty matrix");
  std::string out = std::to_string(matrix.rows()) + "," + std::to_string(matrix.cols());
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    out += '\n';
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(matrix(i, j));
    }
  }
  return out;
}

Matrix parse_matrix_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;
  long rows = 0;
  long cols = 0;
  Matrix m;
  long row = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (!have_header) {
      if (line.empty() || line.front() == '#') continue;
      const auto fields = split_fields(line);
      if (fields.size() != 2) fail(source, line_no, "header must be 'rows,cols'");
      rows = parse_count(fields[0], source, line_no);
      cols = parse_count(fields[1], source, line_no);
      m.resize(rows, cols);
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    if (row >= rows) fail(source, line_no, "more rows than declared (" + std::to_string(rows) + ")");
    const auto fields = split_fields(line);
    if (static_cast<long>(fields.size()) != cols) {
      fail(source, line_no,
           "expected " + std::to_string(cols) + " values, found " + std::to_string(fields.size()));
    }
    for (long j = 0; j < cols; ++j) m(row, j) = parse_double(fields[j], source, line_no);
    ++row;
  }
  if (!have_header) fail(source, line_no, "missing 'rows,cols' header");
  if (row != rows) {
    fail(source, line_no,
         "declared " + std::to_string(rows) + " rows, found " + std::to_string(row));
  }
  return m;
}

Matrix load_matrix_csv(const std::filesystem::path& path) {
  return parse_matrix_csv(read_file(path), path.string());
}

void save_matrix_csv(const Matrix& matrix, const std::filesystem::path& path) {
  write_file(path, format_matrix_csv(matrix));
}

std::vector<std::size_t> load_index_csv(const std::filesystem::path& path) {
  const Matrix m = load_matrix_csv(path);
  if (m.cols() != 1) throw IoError(path.string() + ": index file must have one column");
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double v = m(i, 0);
    if (v < 0.0 || v != std::floor(v)) {
      throw IoError(path.string() + ": row " + std::to_string(i + 2) + " is not an index");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void save_index_csv(const std::vector<std::size_t>& indices, const std::filesystem::path& path) {
  Matrix m(static_cast<Eigen::Index>(indices.size()), 1);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = static_cast<double>(indices[i]);
  }
  save_matrix_csv(m, path);
}

DatasetBundle load_dataset(const std::filesystem::path& dir) {
  DatasetBundle bundle{SpectraMatrix(load_matrix_csv(dir / "Y.csv")), {}, {}, {}, 0};
  if (std::filesystem::exists(dir / "C.csv")) {
    bundle.concentrations = ConcentrationMatrix(load_matrix_csv(dir / "C.csv"));
  }
  if (std::filesystem::exists(dir / "S.csv")) {
    bundle.endmembers = EndmemberMatrix(load_matrix_csv(dir / "S.csv"));
  }
  if (std::filesystem::exists(dir / "meta.csv")) {
    const std::string source = (dir / "meta.csv").string();
    std::istringstream in(read_file(dir / "meta.csv"));
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = trim(raw);
      if (line.empty() || line == "key,value") continue;
      const auto fields = split_fields(line);
      if (fields.size() != 2) fail(source, line_no, "expected 'key,value'");
      if (fields[0] == "seed") {
        const auto* last = fields[1].data() + fields[1].size();
        const auto [ptr, err] = std::from_chars(fields[1].data(), last, bundle.seed);
        if (err != std::errc() || ptr != last) fail(source, line_no, "invalid seed");
      } else if (fields[0] == "noise_variance") {
        bundle.noise_variance_true = parse_double(fields[1], source, line_no);
      }
    }
  }
  bundle.validate();
  return bundle;
}

void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir) {
  bundle.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  save_matrix_csv(bundle.spectra.values(), dir / "Y.csv");
  if (bundle.concentrations) save_matrix_csv(bundle.concentrations->values(), dir / "C.csv");
  if (bundle.endmembers) save_matrix_csv(bundle.endmembers->values(), dir / "S.csv");
  std::string meta = "key,value\nseed," + std::to_string(bundle.seed);
  if (bundle.noise_variance_true) {
    meta += "\nnoise_variance," + format_double(*bundle.noise_variance_true);
  }
  write_file(dir / "meta.csv", meta);
}

}  // namespace kfosu

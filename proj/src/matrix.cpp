#include "lvsk/matrix.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "lvsk/error.hpp"
#include "lvsk/random.hpp"

namespace lvsk {

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  check_capacity(bytes_for(rows, cols, sizeof(double)), "matrix");
  data_.assign(rows * cols, 0.0);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(ErrorKind::dimension, "matrix data length " + std::to_string(data_.size()) +
                                          " != " + std::to_string(rows) + "x" +
                                          std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_eigen(const Eigen::Ref<const Eigen::MatrixXd>& src) {
  Matrix m(static_cast<std::size_t>(src.rows()), static_cast<std::size_t>(src.cols()));
  m.view() = src;
  return m;
}

Matrix Matrix::row_block(std::size_t lo, std::size_t hi) const {
  if (lo > hi || hi > rows_) throw Error(ErrorKind::dimension, "row block out of range");
  std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(lo * cols_),
                          data_.begin() + static_cast<std::ptrdiff_t>(hi * cols_));
  return {hi - lo, cols_, std::move(out)};
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

FileFormat parse_file_format(std::string_view name) {
  if (name == "csv") return FileFormat::csv;
  if (name == "binary" || name == "bin") return FileFormat::binary;
  throw Error(ErrorKind::config, "unknown file format '" + std::string(name) + "'");
}

FileFormat format_from_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv" ? FileFormat::csv : FileFormat::binary;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::string location(std::size_t row, std::size_t col) {
  return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

double parse_field(std::string_view field, std::size_t row, std::size_t col) {
  field = trim(field);
  if (field.empty()) throw Error(ErrorKind::parse, "missing value at " + location(row, col));
  // from_chars rejects a leading '+', which CSV writers sometimes emit.
  if (field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw Error(ErrorKind::parse,
                "non-numeric field '" + std::string(field) + "' at " + location(row, col));
  }
  if (!std::isfinite(value))
    throw Error(ErrorKind::parse, "non-finite value at " + location(row, col));
  return value;
}

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_le(const unsigned char* b, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

Matrix parse_csv(std::string_view text, CsvOptions csv) {
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool header_pending = csv.skip_header;
  std::size_t pending_blank = 0;

  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    if (trim(line).empty()) {
      ++pending_blank;
      continue;
    }
    if (pending_blank > 0) {
      throw Error(ErrorKind::format,
                  "blank line before line " + std::to_string(line_no) + " (missing row)");
    }
    ++rows;
    std::size_t fields = 0;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      auto field = line.substr(start, comma == std::string_view::npos ? line.size() - start
                                                                      : comma - start);
      ++fields;
      if (rows > 1 && fields > cols) {
        throw Error(ErrorKind::format, "ragged row at line " + std::to_string(line_no) +
                                           ": more than " + std::to_string(cols) + " fields");
      }
      data.push_back(parse_field(field, rows, fields));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 1) {
      cols = fields;
    } else if (fields != cols) {
      throw Error(ErrorKind::format, "ragged row at line " + std::to_string(line_no) + ": " +
                                         std::to_string(fields) + " fields, expected " +
                                         std::to_string(cols));
    }
  }
  if (rows == 0) throw Error(ErrorKind::format, "no data rows");
  return {rows, cols, std::move(data)};
}

std::string format_csv(const Matrix& m) {
  std::string out;
  out.reserve(m.size() * 12);
  char buf[64];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out.push_back(',');
      // Shortest representation that parses back to the same double.
      auto res = std::to_chars(buf, buf + sizeof(buf), m(i, j));
      out.append(buf, res.ptr);
    }
    out.push_back('\n');
  }
  return out;
}

Matrix load_matrix(const std::filesystem::path& path, FileFormat format, CsvOptions csv) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for reading");

  if (format == FileFormat::csv) {
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
      return parse_csv(ss.str(), csv);
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ": " + e.what());
    }
  }

  unsigned char header[24];
  if (!in.read(reinterpret_cast<char*>(header), sizeof(header)))
    throw Error(ErrorKind::format, path.string() + ": truncated header");
  if (std::memcmp(header, "LVSK", 4) != 0)
    throw Error(ErrorKind::format, path.string() + ": bad magic (expected LVSK)");
  const auto version = static_cast<std::uint32_t>(read_le(header + 4, 4));
  if (version != kBinaryVersion)
    throw Error(ErrorKind::format, path.string() + ": unsupported version " +
                                       std::to_string(version));
  const auto n = read_le(header + 8, 8);
  const auto d = read_le(header + 16, 8);
  const auto bytes = bytes_for(n, d, sizeof(double));
  check_capacity(bytes, "matrix '" + path.string() + "'");

  std::vector<double> data(n * d);
  if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes)))
    throw Error(ErrorKind::format, path.string() + ": truncated payload");
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : data) v = std::bit_cast<double>(__builtin_bswap64(std::bit_cast<std::uint64_t>(v)));
  }
  Matrix m(n, d, std::move(data));
  if (!m.all_finite()) throw Error(ErrorKind::parse, path.string() + ": non-finite entries");
  return m;
}

void save_matrix(const Matrix& m, const std::filesystem::path& path, FileFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  if (format == FileFormat::csv) {
    const auto text = format_csv(m);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
  } else {
    out.write("LVSK", 4);
    write_u32(out, kBinaryVersion);
    write_u64(out, m.rows());
    write_u64(out, m.cols());
    if constexpr (std::endian::native == std::endian::little) {
      out.write(reinterpret_cast<const char*>(m.data().data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
    } else {
      for (double v : m.data()) write_u64(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  out.flush();
  if (!out) throw Error(ErrorKind::io, "write to '" + path.string() + "' failed");
}

void validate(const SyntheticSpec& spec) {
  if (spec.n == 0 || spec.d == 0) throw Error(ErrorKind::config, "synthetic n and d must be >= 1");
  if (spec.rank < 1 || spec.rank > spec.d)
    throw Error(ErrorKind::config, "synthetic rank must satisfy 1 <= rank <= d");
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma))
    throw Error(ErrorKind::config, "noise_sigma must be finite and >= 0");
}

Matrix gen_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  check_capacity(bytes_for(spec.n, spec.d, sizeof(double)), "synthetic matrix");
  check_capacity(bytes_for(spec.n, spec.rank, sizeof(double)), "synthetic left factor");

  auto fill = [](Eigen::MatrixXd& m, std::uint64_t seed) {
    Rng rng(seed);
    // Row-major fill order so the stream layout does not depend on storage order.
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();
  };

  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto d = static_cast<Eigen::Index>(spec.d);
  const auto r = static_cast<Eigen::Index>(spec.rank);

  Matrix a(spec.n, spec.d);
  {
    Eigen::MatrixXd left(n, r);
    Eigen::MatrixXd right(r, d);
    fill(left, derive_seed(spec.seed, 1));
    fill(right, derive_seed(spec.seed, 2));
    a.view().noalias() = left * right;
  }
  if (spec.noise_sigma > 0.0) {
    Rng rng(derive_seed(spec.seed, 3));
    for (auto& v : a.data()) v += spec.noise_sigma * rng.normal();
  }
  return a;
}

}  // namespace lvsk

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace lvsk {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense row-major n x d matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_eigen(const Eigen::Ref<const Eigen::MatrixXd>& m);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  /// Copy of rows [lo, hi).
  Matrix row_block(std::size_t lo, std::size_t hi) const;

  Eigen::Map<const RowMajorMatrix> view() const {
    return {data_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
  }
  Eigen::Map<RowMajorMatrix> view() {
    return {data_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
  }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class FileFormat { csv, binary };

FileFormat parse_file_format(std::string_view name);
/// ".csv" (any case) maps to csv, everything else to binary.
FileFormat format_from_extension(const std::filesystem::path& path);

struct CsvOptions {
  bool skip_header = false;
};

/// Binary layout, little-endian: "LVSK", u32 version (1), u64 n, u64 d, then
/// n*d IEEE-754 doubles in row-major order.
Matrix load_matrix(const std::filesystem::path& path, FileFormat format,
                   CsvOptions csv = {});
void save_matrix(const Matrix& m, const std::filesystem::path& path, FileFormat format);

Matrix parse_csv(std::string_view text, CsvOptions csv = {});
std::string format_csv(const Matrix& m);

inline constexpr std::uint32_t kBinaryVersion = 1;

/// A = G1 * G2 + N with G1 (n x rank), G2 (rank x d) standard normal and N
/// i.i.d. normal(0, noise_sigma^2). Low-rank signal plus high-rank noise.
struct SyntheticSpec {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t rank = 0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

void validate(const SyntheticSpec& spec);
Matrix gen_synthetic(const SyntheticSpec& spec);

}  // namespace lvsk

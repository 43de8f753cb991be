#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lvsk/matrix.hpp"
#include "lvsk/sketch.hpp"
#include "lvsk/svd.hpp"

namespace lvsk {

enum class LeverageMethod { exact, sketch, sketch_trunc, oracle };

std::string_view to_string(LeverageMethod method);
LeverageMethod parse_leverage_method(std::string_view name);

/// Relative cutoff that keeps exact scores well defined on rank-deficient input.
inline constexpr double kMachineTol = 1e-12;
/// Relative pivot cutoff of the pseudo-inverse oracle.
inline constexpr double kOracleTol = 1e-10;
/// The oracle forms the n x n projector, so it is limited to test-sized input.
inline constexpr std::size_t kOracleMaxRows = 5000;

struct LeverageResult {
  std::vector<double> scores;
  LeverageMethod method = LeverageMethod::exact;
  std::size_t effective_rank = 0;
  double eps = 0.0;
  double sv_tol = 0.0;
  std::optional<SketchSpec> spec;
  double seconds = 0.0;

  double sum() const noexcept;
};

/// l_i = |U_i|^2 over the components with sigma_j > tol * sigma_1.
LeverageResult leverage_exact(const Matrix& a, double tol = kMachineTol);

/// l_i = |H_i|^2 with H = A A^+, A^+ from a complete orthogonal decomposition.
/// Shares no code with the SVD-based path.
LeverageResult leverage_oracle(const Matrix& a);

/// Approximate scores from the sketch S*A using every singular component:
/// U_approx = A V Sigma^-1. Near-zero singular values are inverted as-is;
/// exactly zero ones throw ErrorKind::singular.
LeverageResult leverage_sketched(const Matrix& a, const SketchSpec& spec);

/// As leverage_sketched, but components with sigma_j <= sv_tol * sigma_1 are
/// dropped before inverting.
LeverageResult leverage_sketched_trunc(const Matrix& a, const SketchSpec& spec, double sv_tol);

/// W = V Sigma^-1 (d x r), applied row by row. Each row's score is computed by
/// the same fixed sequence of operations regardless of how rows are batched,
/// so partitioned evaluation reproduces the serial scores exactly.
class BasisProjector {
 public:
  BasisProjector(const Matrix& vt, std::span<const double> sigma);

  std::size_t rank() const noexcept { return rank_; }
  std::size_t cols() const noexcept { return cols_; }

  double score(std::span<const double> row) const;
  /// Scores of rows [lo, hi) of `a`, written to out[lo, hi).
  void score_rows(const Matrix& a, std::size_t lo, std::size_t hi, std::span<double> out) const;
  std::vector<double> scores(const Matrix& a) const;

 private:
  std::size_t cols_ = 0;
  std::size_t rank_ = 0;
  std::vector<double> weights_;  // row-major d x r
};

/// Per-row relative error statistics over rows whose true score is at least
/// `floor`; rows below it make relative error meaningless.
struct ErrorStats {
  std::size_t qualifying = 0;
  std::size_t within_band = 0;
  double max_relative = 0.0;
  double mean_relative = 0.0;

  double fraction_within() const noexcept {
    return qualifying == 0 ? 1.0 : static_cast<double>(within_band) / static_cast<double>(qualifying);
  }
};

inline constexpr double kScoreFloor = 1e-6;

ErrorStats compare_scores(std::span<const double> truth, std::span<const double> approx,
                          double band, double floor = kScoreFloor);

nlohmann::json metadata(const LeverageResult& result);

/// "index,score" with a header line, shortest round-trip formatting.
void write_scores_csv(const LeverageResult& result, const std::filesystem::path& path);
/// Accepts the two-column format above or a single column of scores, with or
/// without a header line.
std::vector<double> read_scores_csv(const std::filesystem::path& path);

}  // namespace lvsk

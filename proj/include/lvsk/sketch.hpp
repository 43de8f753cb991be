#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lvsk/matrix.hpp"

namespace lvsk {

enum class SketchFamily { countsketch, osnap, srht };

std::string_view to_string(SketchFamily family);
SketchFamily parse_sketch_family(std::string_view name);

struct SketchSpec {
  SketchFamily family = SketchFamily::countsketch;
  /// Target embedding distortion, 0 < eps < 1.
  double eps = 0.5;
  /// Column count of the matrix being sketched.
  std::size_t d = 0;
  /// OSNAP nonzeros per column; 0 selects ceil(log2 d).
  std::size_t osnap_s = 0;
  std::uint64_t seed = 0;
  /// Constant in front of the asymptotic row-count rules.
  double size_constant = 1.0;
  std::optional<std::size_t> rows_override;

  friend bool operator==(const SketchSpec&, const SketchSpec&) = default;
};

void validate(const SketchSpec& spec);

/// OSNAP sparsity actually used (1 for the other families).
std::size_t sketch_sparsity(const SketchSpec& spec);

/// Sketch row count k:
///   countsketch  ceil(c (d/eps)^2)
///   osnap        ceil(c (d/eps^2) ln d), at least s
///   srht         smallest power of two >= c (d/eps^2) ln d
/// rows_override wins when set.
std::size_t sketch_rows(const SketchSpec& spec);

nlohmann::json to_json(const SketchSpec& spec);
SketchSpec sketch_spec_from_json(const nlohmann::json& j);

/// Seeded 2-independent multiply-add-shift hash on 64-bit keys, computed in
/// 128-bit arithmetic and returning the high 64 bits.
class PairwiseHash {
 public:
  PairwiseHash() = default;
  explicit PairwiseHash(std::uint64_t seed);

  std::uint64_t operator()(std::uint64_t key) const noexcept {
    return static_cast<std::uint64_t>((mul_ * key + add_) >> 64);
  }
  /// Maps into [0, range) by multiply-high.
  std::uint64_t bucket(std::uint64_t key, std::uint64_t range) const noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)(key)) * range) >> 64);
  }
  /// +1 or -1 from the top output bit.
  double sign(std::uint64_t key) const noexcept {
    return ((*this)(key) >> 63) != 0 ? -1.0 : 1.0;
  }

 private:
  unsigned __int128 mul_ = 0;
  unsigned __int128 add_ = 0;
};

/// The implicit k x n sketching matrix S determined by (spec, n). Never
/// materialized on the hot path; column i of S is enumerated on demand.
class SketchOperator {
 public:
  SketchOperator(const SketchSpec& spec, std::uint64_t n_total);

  const SketchSpec& spec() const noexcept { return spec_; }
  SketchFamily family() const noexcept { return spec_.family; }
  std::size_t k() const noexcept { return k_; }
  std::size_t d() const noexcept { return spec_.d; }
  std::size_t sparsity() const noexcept { return s_; }
  std::uint64_t n_total() const noexcept { return n_total_; }
  /// SRHT padded length (next power of two >= n); 0 for hashing families.
  std::uint64_t padded_rows() const noexcept { return padded_; }
  /// SRHT sampled Hadamard rows, ascending.
  std::span<const std::uint64_t> sampled_rows() const noexcept { return sampled_; }

  /// Sign of the random diagonal D at row i (SRHT only).
  double srht_sign(std::uint64_t i) const noexcept { return diag_.sign(i); }

  /// Calls fn(sketch_row, value) for every nonzero of column i of S.
  template <typename Fn>
  void for_each_in_column(std::uint64_t i, Fn&& fn) const;

  /// Dense k x n S. Test and diagnostic use only.
  Matrix materialize() const;

 private:
  SketchSpec spec_;
  std::uint64_t n_total_ = 0;
  std::size_t k_ = 0;
  std::size_t s_ = 1;
  std::uint64_t padded_ = 0;
  double scale_ = 1.0;
  std::vector<PairwiseHash> buckets_;
  std::vector<PairwiseHash> signs_;
  PairwiseHash diag_;
  std::vector<std::uint64_t> sampled_;
};

/// Accumulated S*A over the rows consumed so far.
///
/// Accumulators carry a compensation term per entry (hi + lo), so the rounded
/// value is effectively the correctly rounded exact sum. This makes merges of
/// partition sketches reproduce the serial pass bit-for-bit regardless of how
/// rows were grouped.
class SketchState {
 public:
  SketchState(std::shared_ptr<const SketchOperator> op);
  SketchState(const SketchSpec& spec, std::uint64_t n_total);

  const SketchOperator& op() const noexcept { return *op_; }
  std::shared_ptr<const SketchOperator> shared_op() const noexcept { return op_; }
  const SketchSpec& spec() const noexcept { return op_->spec(); }
  std::size_t k() const noexcept { return op_->k(); }
  std::size_t d() const noexcept { return op_->d(); }
  std::uint64_t rows_consumed() const noexcept { return rows_consumed_; }

  /// Adds S[:, row_index] * row. Each global index must be consumed at most
  /// once; this is not checked.
  void update(std::uint64_t row_index, std::span<const double> row);

  /// Adds every row of `block`, whose first row has global index `first_row`.
  void update_rows(const Matrix& block, std::uint64_t first_row);

  /// Entrywise sum; the inputs must come from identical specs and disjoint rows.
  void merge_from(const SketchState& other);

  bool compatible_with(const SketchState& other) const noexcept;

  /// The k x d sketch S*A.
  Matrix value() const;

  std::span<const double> accum() const noexcept { return hi_; }
  std::span<const double> residual() const noexcept { return lo_; }

  /// Rebuilds a state from serialized parts. `residual` may be empty.
  static SketchState from_parts(const SketchSpec& spec, std::uint64_t n_total,
                                std::uint64_t rows_consumed, std::span<const double> accum,
                                std::span<const double> residual);

 private:
  friend SketchState srht_apply(const SketchSpec& spec, const Matrix& a);

  std::shared_ptr<const SketchOperator> op_;
  std::vector<double> hi_;
  std::vector<double> lo_;
  std::uint64_t rows_consumed_ = 0;
};

SketchState merge(const SketchState& a, const SketchState& b);

/// SRHT applied to all of A at once: zero-pad to the next power of two, flip
/// signs by D, FWHT each column, keep the sampled rows, scale by 1/sqrt(k).
SketchState srht_apply(const SketchSpec& spec, const Matrix& a);

/// S*A for any family: streaming updates for the hashing sketches,
/// srht_apply for SRHT.
SketchState sketch_matrix(const SketchSpec& spec, const Matrix& a);

/// Writes `path` (S*A in the matrix binary format), `path`.json (spec and
/// counters) and `path`.residual.bin (compensation terms).
void save_state(const SketchState& state, const std::filesystem::path& path);
SketchState load_state(const std::filesystem::path& path);
nlohmann::json state_metadata(const SketchState& state);

// ---------------------------------------------------------------------------

template <typename Fn>
void SketchOperator::for_each_in_column(std::uint64_t i, Fn&& fn) const {
  switch (spec_.family) {
    case SketchFamily::countsketch:
      fn(static_cast<std::size_t>(buckets_[0].bucket(i, k_)), signs_[0].sign(i));
      break;
    case SketchFamily::osnap:
      // One nonzero in each of s contiguous row blocks, so the s rows are distinct.
      for (std::size_t j = 0; j < s_; ++j) {
        const std::size_t lo = j * k_ / s_;
        const std::size_t hi = (j + 1) * k_ / s_;
        fn(lo + static_cast<std::size_t>(buckets_[j].bucket(i, hi - lo)),
           signs_[j].sign(i) * scale_);
      }
      break;
    case SketchFamily::srht: {
      const double sd = diag_.sign(i) * scale_;
      for (std::size_t t = 0; t < k_; ++t) {
        const bool odd = (__builtin_popcountll(sampled_[t] & i) & 1) != 0;
        fn(t, odd ? -sd : sd);
      }
      break;
    }
  }
}

}  // namespace lvsk

#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <vector>

#include <nlohmann/json.hpp>

#include "lvsk/leverage.hpp"
#include "lvsk/sketch.hpp"

namespace lvsk {

struct RowRange {
  std::size_t lo = 0;
  std::size_t hi = 0;

  std::size_t size() const noexcept { return hi - lo; }
  friend bool operator==(const RowRange&, const RowRange&) = default;
};

/// w contiguous ranges covering [0, n); the first n % w ranges get one extra row.
std::vector<RowRange> partition_rows(std::size_t n, std::size_t w);

/// A worker's share of A: its global row range and an owned copy of the rows.
struct Partition {
  std::size_t worker_id = 0;
  RowRange range;
  Matrix rows;
};

struct CoordinatorReport {
  explicit CoordinatorReport(SketchState merged_state) : merged(std::move(merged_state)) {}

  SketchState merged;
  Matrix basis_vt;                 // V'^T, r' x d
  std::vector<double> basis_sigma; // Sigma', r'
  std::size_t workers = 0;
  std::vector<double> worker_sketch_seconds;
  std::vector<double> worker_score_seconds;
  double merge_seconds = 0.0;
  double svd_seconds = 0.0;
  double total_seconds = 0.0;
  /// Sketch payload shipped to the coordinator: w * k * d * 8 bytes.
  std::uint64_t bytes_to_coordinator = 0;
  /// Compensation terms shipped alongside the payload (same size).
  std::uint64_t residual_bytes_to_coordinator = 0;
  /// Basis broadcast back to the workers: w * (r' * d + r') * 8 bytes.
  std::uint64_t bytes_broadcast = 0;
};

struct DistributedResult {
  LeverageResult leverage;
  CoordinatorReport report;
};

/// Coordinator-model sketching: each worker sketches its partition with global
/// row indices, the coordinator merges in worker order, truncates the SVD of
/// the merged sketch and broadcasts the basis, and workers score their rows.
/// The scores equal leverage_sketched_trunc(a, spec, sv_tol) bit for bit.
/// `max_threads` caps how many workers compute at once (0 = no cap).
DistributedResult run_distributed(const Matrix& a, const SketchSpec& spec, std::size_t workers,
                                  double sv_tol, std::size_t max_threads = 0);

nlohmann::json to_json(const CoordinatorReport& report);

nlohmann::json basis_to_json(const Matrix& vt, std::span<const double> sigma);
void basis_from_json(const nlohmann::json& j, Matrix& vt, std::vector<double>& sigma);

/// Unbounded multi-producer queue used for worker/coordinator messages.
template <typename T>
class Channel {
 public:
  void send(T value) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(value));
    }
    ready_.notify_one();
  }

  T receive() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [this] { return !queue_.empty(); });
    T value = std::move(queue_.front());
    queue_.pop_front();
    return value;
  }

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<T> queue_;
};

}  // namespace lvsk

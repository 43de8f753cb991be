#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace lvsk {

/// A timing grid: every (n, method, eps) cell is timed `repeats` times on one
/// synthetic matrix per n. Only the score computation is timed; generation
/// happens before the clock starts.
struct BenchScenario {
  std::string name = "custom";
  std::vector<std::size_t> n_values;
  std::size_t d = 16;
  /// 0 means full column rank (rank = d).
  std::size_t rank = 0;
  double noise_sigma = 0.0;
  /// Any of "exact", "countsketch", "osnap", "srht".
  std::vector<std::string> methods;
  std::vector<double> eps_values{0.5};
  std::size_t repeats = 1;
  double size_constant = 1.0;
  double sv_tol = 1e-3;
  std::uint64_t seed = 0;
};

void validate(const BenchScenario& scenario);

/// Named grids: table1, table2, table3, table4, smoke.
BenchScenario bench_preset(const std::string& name);

struct BenchRecord {
  std::size_t n = 0;
  std::size_t d = 0;
  std::string method;
  double eps = 0.0;
  std::size_t repeat = 0;
  double seconds = 0.0;
  /// "ok", or "skipped: <reason>" for cells over the memory cap, or "error: <reason>".
  std::string status = "ok";
};

struct BenchSummary {
  std::size_t n = 0;
  std::size_t d = 0;
  std::string method;
  double eps = 0.0;
  double median_seconds = 0.0;
  std::size_t runs = 0;
  std::string status = "ok";
};

using BenchProgress = std::function<void(const BenchRecord&)>;

std::vector<BenchRecord> run_bench(const BenchScenario& scenario, const BenchProgress& progress = {});
std::vector<BenchSummary> summarize(const std::vector<BenchRecord>& records);

/// Columns: n,d,method,eps,repeat,seconds,status
void write_bench_csv(const std::vector<BenchRecord>& records, const std::filesystem::path& path);
/// Columns: n,d,method,eps,median_seconds,runs,status
void write_summary_csv(const std::vector<BenchSummary>& summary, const std::filesystem::path& path);

nlohmann::json to_json(const BenchScenario& scenario);

}  // namespace lvsk

#include "lvsk/dist.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <memory>
#include <optional>
#include <semaphore>
#include <thread>

#include "lvsk/error.hpp"

namespace lvsk {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct SketchMessage {
  std::size_t worker_id = 0;
  std::optional<SketchState> state;
  double seconds = 0.0;
  std::exception_ptr error;
};

// A null projector tells the worker to stop.
using BasisMessage = std::shared_ptr<const BasisProjector>;

struct ScoreMessage {
  std::size_t worker_id = 0;
  std::vector<double> scores;
  double seconds = 0.0;
  std::exception_ptr error;
};

// Caps the number of workers computing at the same time.
class ComputeSlots {
 public:
  explicit ComputeSlots(std::ptrdiff_t slots) : sem_(slots) {}
  void acquire() { sem_.acquire(); }
  void release() { sem_.release(); }

 private:
  std::counting_semaphore<> sem_;
};

struct SlotGuard {
  explicit SlotGuard(ComputeSlots& s) : slots(s) { slots.acquire(); }
  ~SlotGuard() { slots.release(); }
  ComputeSlots& slots;
};

}  // namespace

std::vector<RowRange> partition_rows(std::size_t n, std::size_t w) {
  if (w == 0) throw Error(ErrorKind::config, "worker count must be >= 1");
  if (w > n) {
    throw Error(ErrorKind::config, "cannot split " + std::to_string(n) + " rows across " +
                                       std::to_string(w) + " workers");
  }
  std::vector<RowRange> out;
  out.reserve(w);
  const std::size_t base = n / w;
  const std::size_t extra = n % w;
  std::size_t lo = 0;
  for (std::size_t p = 0; p < w; ++p) {
    const std::size_t size = base + (p < extra ? 1 : 0);
    out.push_back({lo, lo + size});
    lo += size;
  }
  return out;
}

DistributedResult run_distributed(const Matrix& a, const SketchSpec& spec, std::size_t workers,
                                  double sv_tol, std::size_t max_threads) {
  if (spec.family == SketchFamily::srht) {
    throw Error(ErrorKind::unsupported,
                "SRHT cannot be merged across row partitions; use countsketch or osnap");
  }
  if (a.cols() != spec.d) throw Error(ErrorKind::dimension, "matrix columns differ from spec.d");
  const auto start = Clock::now();
  const auto ranges = partition_rows(a.rows(), workers);
  const auto op = std::make_shared<const SketchOperator>(spec, a.rows());

  std::vector<Partition> partitions;
  partitions.reserve(workers);
  for (std::size_t p = 0; p < workers; ++p)
    partitions.push_back({p, ranges[p], a.row_block(ranges[p].lo, ranges[p].hi)});

  Channel<SketchMessage> sketches;
  Channel<ScoreMessage> scores;
  std::vector<Channel<BasisMessage>> basis_inbox(workers);
  ComputeSlots slots(static_cast<std::ptrdiff_t>(max_threads == 0 ? workers
                                                                  : std::min(workers, max_threads)));

  auto worker = [&](Partition part) {
    SketchMessage out{part.worker_id, std::nullopt, 0.0, nullptr};
    try {
      SlotGuard guard(slots);
      const auto t0 = Clock::now();
      SketchState state(op);
      state.update_rows(part.rows, part.range.lo);
      out.state = std::move(state);
      out.seconds = seconds_since(t0);
    } catch (...) {
      out.error = std::current_exception();
    }
    sketches.send(std::move(out));

    const BasisMessage basis = basis_inbox[part.worker_id].receive();
    if (!basis) return;
    ScoreMessage reply{part.worker_id, {}, 0.0, nullptr};
    try {
      SlotGuard guard(slots);
      const auto t0 = Clock::now();
      reply.scores = basis->scores(part.rows);
      reply.seconds = seconds_since(t0);
    } catch (...) {
      reply.error = std::current_exception();
    }
    scores.send(std::move(reply));
  };

  std::vector<std::jthread> threads;
  threads.reserve(workers);
  for (auto& part : partitions) threads.emplace_back(worker, std::move(part));

  auto broadcast = [&](const BasisMessage& msg) {
    for (auto& inbox : basis_inbox) inbox.send(msg);
  };

  // Coordinator: block until every sketch has arrived, then merge in worker order.
  std::vector<std::optional<SketchMessage>> received(workers);
  std::exception_ptr failure;
  for (std::size_t i = 0; i < workers; ++i) {
    auto msg = sketches.receive();
    if (msg.error && !failure) failure = msg.error;
    received[msg.worker_id] = std::move(msg);
  }
  if (failure) {
    broadcast(nullptr);
    std::rethrow_exception(failure);
  }

  CoordinatorReport report(*received[0]->state);
  report.workers = workers;
  report.worker_sketch_seconds.resize(workers);
  report.worker_score_seconds.resize(workers);
  report.worker_sketch_seconds[0] = received[0]->seconds;

  const auto merge_start = Clock::now();
  for (std::size_t p = 1; p < workers; ++p) {
    report.merged.merge_from(*received[p]->state);
    report.worker_sketch_seconds[p] = received[p]->seconds;
  }
  received.clear();
  report.merge_seconds = seconds_since(merge_start);

  BasisMessage basis;
  try {
    const auto svd_start = Clock::now();
    const auto factors = truncate(right_factors(report.merged.value()), sv_tol);
    basis = std::make_shared<const BasisProjector>(factors.vt, factors.sigma);
    report.basis_vt = factors.vt;
    report.basis_sigma = factors.sigma;
    report.svd_seconds = seconds_since(svd_start);
  } catch (...) {
    broadcast(nullptr);
    throw;
  }
  broadcast(basis);

  LeverageResult leverage;
  leverage.scores.resize(a.rows());
  for (std::size_t i = 0; i < workers; ++i) {
    auto msg = scores.receive();
    if (msg.error) {
      if (!failure) failure = msg.error;
      continue;
    }
    const auto range = ranges[msg.worker_id];
    std::copy(msg.scores.begin(), msg.scores.end(),
              leverage.scores.begin() + static_cast<std::ptrdiff_t>(range.lo));
    report.worker_score_seconds[msg.worker_id] = msg.seconds;
  }
  threads.clear();
  if (failure) std::rethrow_exception(failure);

  const std::uint64_t kd = static_cast<std::uint64_t>(op->k()) * op->d();
  report.bytes_to_coordinator = workers * kd * sizeof(double);
  report.residual_bytes_to_coordinator = report.bytes_to_coordinator;
  report.bytes_broadcast = workers * (report.basis_sigma.size() * (op->d() + 1)) * sizeof(double);
  report.total_seconds = seconds_since(start);

  leverage.method = LeverageMethod::sketch_trunc;
  leverage.effective_rank = basis->rank();
  leverage.eps = spec.eps;
  leverage.sv_tol = sv_tol;
  leverage.spec = spec;
  leverage.seconds = report.total_seconds;
  return {std::move(leverage), std::move(report)};
}

nlohmann::json to_json(const CoordinatorReport& report) {
  return {{"workers", report.workers},
          {"spec", to_json(report.merged.spec())},
          {"k", report.merged.k()},
          {"d", report.merged.d()},
          {"rows_consumed", report.merged.rows_consumed()},
          {"effective_rank", report.basis_sigma.size()},
          {"worker_sketch_seconds", report.worker_sketch_seconds},
          {"worker_score_seconds", report.worker_score_seconds},
          {"merge_seconds", report.merge_seconds},
          {"svd_seconds", report.svd_seconds},
          {"total_seconds", report.total_seconds},
          {"bytes_to_coordinator", report.bytes_to_coordinator},
          {"residual_bytes_to_coordinator", report.residual_bytes_to_coordinator},
          {"bytes_broadcast", report.bytes_broadcast}};
}

nlohmann::json basis_to_json(const Matrix& vt, std::span<const double> sigma) {
  return {{"rank", vt.rows()},
          {"d", vt.cols()},
          {"sigma", std::vector<double>(sigma.begin(), sigma.end())},
          {"vt", std::vector<double>(vt.data().begin(), vt.data().end())}};
}

void basis_from_json(const nlohmann::json& j, Matrix& vt, std::vector<double>& sigma) {
  try {
    const auto rank = j.at("rank").get<std::size_t>();
    const auto d = j.at("d").get<std::size_t>();
    sigma = j.at("sigma").get<std::vector<double>>();
    vt = Matrix(rank, d, j.at("vt").get<std::vector<double>>());
    if (sigma.size() != rank) throw Error(ErrorKind::format, "basis sigma length mismatch");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("bad basis JSON: ") + e.what());
  }
}

}  // namespace lvsk

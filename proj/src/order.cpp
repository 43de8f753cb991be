#include "lvsk/order.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lvsk/error.hpp"
#include "lvsk/random.hpp"

namespace lvsk {

namespace {

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> out(n);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

std::vector<std::size_t> decreasing(std::span<const double> p) {
  auto idx = iota_indices(p.size());
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  return idx;
}

std::vector<std::size_t> with_replacement(std::span<const double> p, Rng& rng) {
  std::vector<double> cumulative(p.size());
  std::partial_sum(p.begin(), p.end(), cumulative.begin());
  const double total = cumulative.back();
  // Last index with positive mass, used when rounding puts u*total at the end.
  std::size_t last = p.size() - 1;
  while (last > 0 && p[last] <= 0.0) --last;

  std::vector<std::size_t> out(p.size());
  for (auto& slot : out) {
    const double target = rng.uniform() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    slot = it == cumulative.end() ? last : static_cast<std::size_t>(it - cumulative.begin());
    if (p[slot] <= 0.0) slot = last;
  }
  return out;
}

std::vector<std::size_t> without_replacement(std::span<const double> p, Rng& rng) {
  // Exponential keys: key_i = -ln(u_i) / P_i, ascending. Zero-mass items get
  // an infinite key and land at the end in index order.
  std::vector<double> keys(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = -std::log(rng.uniform_open_zero());
    keys[i] = p[i] > 0.0 ? e / p[i] : std::numeric_limits<double>::infinity();
  }
  auto idx = iota_indices(p.size());
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return idx;
}

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  auto idx = iota_indices(n);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform_below(i)]);
  return idx;
}

}  // namespace

std::string_view to_string(OrderingKind kind) {
  switch (kind) {
    case OrderingKind::shuffle: return "shuffle";
    case OrderingKind::dec: return "dec";
    case OrderingKind::dec_swr: return "dec-swr";
    case OrderingKind::dec_swor: return "dec-swor";
  }
  return "unknown";
}

OrderingKind parse_ordering_kind(std::string_view name) {
  if (name == "shuffle") return OrderingKind::shuffle;
  if (name == "dec") return OrderingKind::dec;
  if (name == "dec-swr" || name == "dec_swr") return OrderingKind::dec_swr;
  if (name == "dec-swor" || name == "dec_swor") return OrderingKind::dec_swor;
  throw Error(ErrorKind::config, "unknown ordering policy '" + std::string(name) + "'");
}

std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) noexcept {
  return derive_seed(seed, 0x6570000000000000ULL ^ static_cast<std::uint64_t>(epoch));
}

std::vector<double> scores_to_distribution(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorKind::degenerate, "no scores");
  double total = 0.0;
  for (double s : scores) {
    if (!(s >= 0.0) || !std::isfinite(s))
      throw Error(ErrorKind::config, "scores must be finite and nonnegative");
    total += s;
  }
  if (!(total > 0.0)) throw Error(ErrorKind::degenerate, "all scores are zero");
  std::vector<double> p(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) p[i] = scores[i] / total;
  return p;
}

OrderingPlan make_plan(std::span<const double> p, const OrderingPolicy& policy, std::size_t epoch) {
  if (p.empty()) throw Error(ErrorKind::degenerate, "empty distribution");
  OrderingPlan plan{epoch, {}, policy};
  Rng rng(epoch_seed(policy.seed, epoch));
  switch (policy.kind) {
    case OrderingKind::dec: plan.indices = decreasing(p); break;
    case OrderingKind::dec_swr: plan.indices = with_replacement(p, rng); break;
    case OrderingKind::dec_swor: plan.indices = without_replacement(p, rng); break;
    case OrderingKind::shuffle: plan.indices = shuffled(p.size(), rng); break;
  }
  return plan;
}

std::vector<std::vector<std::size_t>> emit_batches(const OrderingPlan& plan, std::size_t batch_size) {
  if (batch_size == 0) throw Error(ErrorKind::config, "batch size must be >= 1");
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t lo = 0; lo < plan.indices.size(); lo += batch_size) {
    const std::size_t hi = std::min(plan.indices.size(), lo + batch_size);
    batches.emplace_back(plan.indices.begin() + static_cast<std::ptrdiff_t>(lo),
                         plan.indices.begin() + static_cast<std::ptrdiff_t>(hi));
  }
  return batches;
}

}  // namespace lvsk

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace lvsk {

enum class OrderingKind { shuffle, dec, dec_swr, dec_swor };

std::string_view to_string(OrderingKind kind);
/// Accepts "dec-swr" and "dec_swr" spellings.
OrderingKind parse_ordering_kind(std::string_view name);

struct OrderingPolicy {
  OrderingKind kind = OrderingKind::shuffle;
  std::uint64_t seed = 0;
};

struct OrderingPlan {
  std::size_t epoch = 0;
  std::vector<std::size_t> indices;
  OrderingPolicy policy;
};

/// P_i = l_i / sum_j l_j. Throws ErrorKind::degenerate when every score is zero.
std::vector<double> scores_to_distribution(std::span<const double> scores);

/// One epoch's ordering of [0, n):
///   dec       indices by decreasing P, ties by ascending index; same every epoch
///   dec_swr   n independent draws from P (duplicates allowed, P_i = 0 never drawn)
///   dec_swor  weighted sampling without replacement, a permutation
///   shuffle   uniform random permutation
/// Stochastic policies draw from a stream keyed by (seed, epoch).
OrderingPlan make_plan(std::span<const double> p, const OrderingPolicy& policy, std::size_t epoch);

/// Contiguous chunks of plan.indices; the last one may be short.
std::vector<std::vector<std::size_t>> emit_batches(const OrderingPlan& plan, std::size_t batch_size);

std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) noexcept;

}  // namespace lvsk

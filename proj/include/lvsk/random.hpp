#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lvsk {

/// Name recorded in output metadata so results can be tied to the generator.
inline constexpr std::string_view kGeneratorName = "mt19937_64/splitmix64-seeded/box-muller";

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Independent child seed for sub-stream `stream` of `seed`. Used to split one
/// user seed into per-purpose streams (G1, G2, noise, hash keys, epochs).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Portable random source: the engine sequence is fixed by the standard, and
/// the distributions below are implemented here rather than taken from
/// <random>, whose distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in (0, 1]; safe to take log of.
  double uniform_open_zero();
  /// Uniform integer in [0, bound); bound > 0.
  std::uint64_t uniform_below(std::uint64_t bound);
  /// Standard normal.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lvsk

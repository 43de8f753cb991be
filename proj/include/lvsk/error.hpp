#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lvsk {

enum class ErrorKind {
  io,
  format,
  parse,
  capacity,
  dimension,
  degenerate,
  incompatible,
  unsupported,
  config,
  singular,
  numeric,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it to an exit code and tests can assert on the category.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bytes a single allocation may request. Defaults to 4 GiB; the LVSK_MEM_CAP
/// environment variable (plain bytes, or with a K/M/G suffix) overrides the
/// default, and set_memory_cap() overrides both.
std::uint64_t memory_cap();
void set_memory_cap(std::uint64_t bytes);
void reset_memory_cap();

/// Parses "4096", "512M", "4G" and friends. Throws ErrorKind::config.
std::uint64_t parse_byte_size(std::string_view text);

/// Throws ErrorKind::capacity when `bytes` exceeds memory_cap().
void check_capacity(std::uint64_t bytes, std::string_view what);

/// Saturating element-count-to-bytes helper for capacity checks.
std::uint64_t bytes_for(std::uint64_t count, std::uint64_t elem_size,
                        std::uint64_t repeat = 1);

}  // namespace lvsk

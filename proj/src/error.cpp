#include "lvsk/error.hpp"

#include <atomic>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <limits>

namespace lvsk {

namespace {

constexpr std::uint64_t kDefaultCap = std::uint64_t{4} << 30;

// 0 means "not overridden".
std::atomic<std::uint64_t> g_cap_override{0};

}  // namespace

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::parse: return "parse";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::incompatible: return "incompatible";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::config: return "config";
    case ErrorKind::singular: return "singular";
    case ErrorKind::numeric: return "numeric";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
      kind_(kind) {}

std::uint64_t parse_byte_size(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr == text.data())
    throw Error(ErrorKind::config, "invalid byte size '" + std::string(text) + "'");
  std::string_view suffix(ptr, text.data() + text.size() - ptr);
  unsigned shift = 0;
  if (suffix.empty()) {
    shift = 0;
  } else if (suffix == "K" || suffix == "k" || suffix == "KiB") {
    shift = 10;
  } else if (suffix == "M" || suffix == "m" || suffix == "MiB") {
    shift = 20;
  } else if (suffix == "G" || suffix == "g" || suffix == "GiB") {
    shift = 30;
  } else {
    throw Error(ErrorKind::config, "invalid byte size suffix '" + std::string(suffix) + "'");
  }
  if (shift > 0 && value > (std::numeric_limits<std::uint64_t>::max() >> shift))
    throw Error(ErrorKind::config, "byte size overflows: '" + std::string(text) + "'");
  return value << shift;
}

std::uint64_t memory_cap() {
  if (auto v = g_cap_override.load(); v != 0) return v;
  if (const char* env = std::getenv("LVSK_MEM_CAP"); env != nullptr && *env != '\0')
    return parse_byte_size(env);
  return kDefaultCap;
}

void set_memory_cap(std::uint64_t bytes) {
  if (bytes == 0) throw Error(ErrorKind::config, "memory cap must be positive");
  g_cap_override.store(bytes);
}

void reset_memory_cap() { g_cap_override.store(0); }

std::uint64_t bytes_for(std::uint64_t count, std::uint64_t elem_size,
                        std::uint64_t repeat) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  if (elem_size != 0 && count > kMax / elem_size) return kMax;
  const std::uint64_t once = count * elem_size;
  if (repeat != 0 && once > kMax / repeat) return kMax;
  return once * repeat;
}

void check_capacity(std::uint64_t bytes, std::string_view what) {
  const auto cap = memory_cap();
  if (bytes > cap) {
    throw Error(ErrorKind::capacity, std::string(what) + " needs " + std::to_string(bytes) +
                                         " bytes, over the " + std::to_string(cap) +
                                         "-byte memory cap");
  }
}

}  // namespace lvsk

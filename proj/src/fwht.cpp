#include "lvsk/fwht.hpp"

#include <bit>

#include "lvsk/error.hpp"

namespace lvsk {

void fwht(std::span<double> values) {
  const std::size_t len = values.size();
  if (len == 0 || !std::has_single_bit(len))
    throw Error(ErrorKind::dimension, "FWHT length must be a power of two");
  double* v = values.data();
  for (std::size_t h = 1; h < len; h *= 2) {
    for (std::size_t i = 0; i < len; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double x = v[j];
        const double y = v[j + h];
        v[j] = x + y;
        v[j + h] = x - y;
      }
    }
  }
}

}  // namespace lvsk

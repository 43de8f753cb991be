#pragma once

#include <cstddef>
#include <vector>

#include "lvsk/matrix.hpp"

namespace lvsk {

/// Thin SVD A = U diag(sigma) Vt with r = min(n, d). `u` is left empty by
/// right_factors(), which skips the left factor.
struct SvdResult {
  Matrix u;
  std::vector<double> sigma;
  Matrix vt;

  std::size_t rank() const noexcept { return sigma.size(); }
  bool has_u() const noexcept { return !u.empty(); }
};

SvdResult thin_svd(const Matrix& a);

/// Singular values and right singular vectors only. Tall inputs are reduced
/// with a Householder QR first, so the cost is one pass over the rows.
SvdResult right_factors(const Matrix& a);

/// Keeps the components with sigma_j > tol * sigma_1 (strict). `tol` is
/// relative to the largest singular value. Throws ErrorKind::degenerate for
/// the all-zero matrix.
SvdResult truncate(const SvdResult& svd, double tol);

/// Number of components truncate() would keep.
std::size_t truncated_rank(const std::vector<double>& sigma, double tol);

}  // namespace lvsk

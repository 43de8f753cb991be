#include <cmath>

#include "doctest.h"
#include "lvsk/error.hpp"
#include "lvsk/svd.hpp"
#include "oracles.hpp"

using namespace lvsk;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an lvsk::Error");
  return ErrorKind::numeric;
}

}  // namespace

TEST_CASE("svd of the identity") {
  const auto s = thin_svd(Matrix::identity(5));
  REQUIRE(s.sigma.size() == 5);
  for (double v : s.sigma) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("svd of diag(3, 2, 1)") {
  Matrix a(3, 3);
  a(0, 0) = 3;
  a(1, 1) = 1;
  a(2, 2) = 2;
  const auto s = thin_svd(a);
  CHECK(s.sigma[0] == doctest::Approx(3.0));
  CHECK(s.sigma[1] == doctest::Approx(2.0));
  CHECK(s.sigma[2] == doctest::Approx(1.0));
}

TEST_CASE("thin svd reconstructs with orthonormal factors") {
  for (auto [n, d] : {std::pair{50, 8}, std::pair{8, 8}, std::pair{6, 9}, std::pair{400, 5}}) {
    CAPTURE(n);
    CAPTURE(d);
    const auto a = testing::random_matrix(n, d, 31);
    const auto s = thin_svd(a);
    const auto r = static_cast<Eigen::Index>(std::min(n, d));
    REQUIRE(s.u.rows() == static_cast<std::size_t>(n));
    REQUIRE(s.u.cols() == static_cast<std::size_t>(r));
    REQUIRE(s.vt.rows() == static_cast<std::size_t>(r));
    const Eigen::MatrixXd u = testing::dense(s.u);
    const Eigen::MatrixXd vt = testing::dense(s.vt);
    Eigen::VectorXd sig(r);
    for (Eigen::Index j = 0; j < r; ++j) sig(j) = s.sigma[static_cast<std::size_t>(j)];
    const Eigen::MatrixXd back = u * sig.asDiagonal() * vt;
    CHECK((back - testing::dense(a)).norm() / testing::dense(a).norm() < 1e-12);
    CHECK((u.transpose() * u - Eigen::MatrixXd::Identity(r, r)).norm() < 1e-12);
    CHECK((vt * vt.transpose() - Eigen::MatrixXd::Identity(r, r)).norm() < 1e-12);
    for (Eigen::Index j = 1; j < r; ++j) CHECK(sig(j) <= sig(j - 1));

    const auto jac = testing::jacobi_singular_values(a);
    for (Eigen::Index j = 0; j < r; ++j) CHECK(sig(j) == doctest::Approx(jac(j)).epsilon(1e-10));

    const auto rf = right_factors(a);
    CHECK_FALSE(rf.has_u());
    for (Eigen::Index j = 0; j < r; ++j)
      CHECK(rf.sigma[static_cast<std::size_t>(j)] == doctest::Approx(jac(j)).epsilon(1e-10));
    // Right vectors agree up to sign.
    const Eigen::MatrixXd rvt = testing::dense(rf.vt);
    for (Eigen::Index j = 0; j < r; ++j)
      CHECK(std::abs(rvt.row(j).dot(vt.row(j))) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("truncate keeps sigma_j strictly above tol * sigma_1") {
  SvdResult s;
  s.sigma = {4.0, 2.0, 0.4, 0.0};
  s.vt = Matrix::identity(4);
  s.u = Matrix::identity(4);
  CHECK(truncated_rank(s.sigma, 0.0) == 3);
  CHECK(truncated_rank(s.sigma, 0.1) == 2);  // 0.4 is not > 0.4
  CHECK(truncated_rank(s.sigma, 0.09) == 3);
  CHECK(truncated_rank(s.sigma, 0.5) == 1);

  const auto t = truncate(s, 0.1);
  CHECK(t.rank() == 2);
  CHECK(t.vt.rows() == 2);
  CHECK(t.vt.cols() == 4);
  CHECK(t.u.cols() == 2);
  const auto again = truncate(t, 0.1);
  CHECK(again.sigma == t.sigma);
  CHECK(again.vt == t.vt);

  CHECK(kind_of([&] { truncate(s, 1.0); }) == ErrorKind::config);
  CHECK(kind_of([&] { truncate(s, -0.1); }) == ErrorKind::config);
  SvdResult zero;
  zero.sigma = {0.0, 0.0};
  zero.vt = Matrix(2, 2);
  CHECK(kind_of([&] { truncate(zero, 0.1); }) == ErrorKind::degenerate);
}

TEST_CASE("truncation recovers the rank of low-rank-plus-noise data") {
  const auto a = gen_synthetic({2000, 200, 50, 1e-3, 11});
  const auto s = right_factors(a);
  CHECK(truncated_rank(s.sigma, 1e-2) == 50);
  CHECK(testing::count_above(testing::jacobi_singular_values(a), 1e-2) == 50);
}

TEST_CASE("svd input errors") {
  CHECK(kind_of([] { thin_svd(Matrix(0, 3)); }) == ErrorKind::dimension);
  Matrix bad(2, 2);
  bad(0, 0) = std::nan("");
  CHECK(kind_of([&] { thin_svd(bad); }) == ErrorKind::numeric);
}

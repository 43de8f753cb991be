#include "lvsk/svd.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include "lvsk/error.hpp"

namespace lvsk {

namespace {

// Use QR preconditioning once the matrix is clearly taller than wide.
bool is_tall(const Matrix& a) { return a.rows() >= 2 * a.cols(); }

void check_input(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw Error(ErrorKind::dimension, "SVD of an empty matrix");
  if (!a.all_finite()) throw Error(ErrorKind::numeric, "SVD input has non-finite entries");
}

template <typename Svd>
void check_converged(const Svd& svd) {
  if (svd.info() != Eigen::Success)
    throw Error(ErrorKind::numeric, "SVD backend did not converge");
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

SvdResult thin_svd(const Matrix& a) {
  check_input(a);
  SvdResult out;
  if (is_tall(a)) {
    const auto d = static_cast<Eigen::Index>(a.cols());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a.view());
    const Eigen::MatrixXd r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    check_converged(svd);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.view().rows(), d);
    out.u = Matrix::from_eigen(q * svd.matrixU());
    out.sigma = to_vector(svd.singularValues());
    out.vt = Matrix::from_eigen(svd.matrixV().transpose());
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(a.view()),
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    check_converged(svd);
    out.u = Matrix::from_eigen(svd.matrixU());
    out.sigma = to_vector(svd.singularValues());
    out.vt = Matrix::from_eigen(svd.matrixV().transpose());
  }
  return out;
}

SvdResult right_factors(const Matrix& a) {
  check_input(a);
  SvdResult out;
  Eigen::MatrixXd reduced;
  if (is_tall(a)) {
    const auto d = static_cast<Eigen::Index>(a.cols());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a.view());
    reduced = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  } else {
    reduced = a.view();
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(reduced, Eigen::ComputeThinV);
  check_converged(svd);
  out.sigma = to_vector(svd.singularValues());
  out.vt = Matrix::from_eigen(svd.matrixV().transpose());
  return out;
}

std::size_t truncated_rank(const std::vector<double>& sigma, double tol) {
  if (!(tol >= 0.0 && tol < 1.0))
    throw Error(ErrorKind::config, "truncation tolerance must lie in [0, 1)");
  if (sigma.empty() || !(sigma.front() > 0.0))
    throw Error(ErrorKind::degenerate, "all singular values are zero");
  const double cutoff = tol * sigma.front();
  std::size_t kept = 0;
  while (kept < sigma.size() && sigma[kept] > cutoff) ++kept;
  return kept;
}

SvdResult truncate(const SvdResult& svd, double tol) {
  const std::size_t kept = truncated_rank(svd.sigma, tol);
  SvdResult out;
  out.sigma.assign(svd.sigma.begin(), svd.sigma.begin() + static_cast<std::ptrdiff_t>(kept));
  out.vt = svd.vt.row_block(0, kept);
  if (svd.has_u()) {
    const auto k = static_cast<Eigen::Index>(kept);
    out.u = Matrix::from_eigen(svd.u.view().leftCols(k));
  }
  return out;
}

}  // namespace lvsk

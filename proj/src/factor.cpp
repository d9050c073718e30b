#include "schwarzq/factor.hpp"

#include <stdexcept>

namespace schwarzq {

Mat LocalFactor::dense() const {
  Mat F(rows(), cols());
  Vec e = Vec::Zero(cols());
  for (Index j = 0; j < cols(); ++j) {
    e[j] = 1.0;
    F.col(j) = apply(e);
    e[j] = 0.0;
  }
  return F;
}

CholeskyInverseFactor::CholeskyInverseFactor(const Mat& spd) : n_(spd.rows()), llt_(spd) {
  if (spd.rows() != spd.cols()) throw std::invalid_argument("Cholesky factor of a non-square matrix");
  if (llt_.info() != Eigen::Success)
    throw std::runtime_error("Cholesky factorisation failed: matrix is not positive definite");
}

Vec CholeskyInverseFactor::apply(const Vec& y) const {
  // L^{-T} y
  return llt_.matrixU().solve(y);
}

Vec CholeskyInverseFactor::apply_transpose(const Vec& x) const {
  // L^{-1} x
  return llt_.matrixL().solve(x);
}

} // namespace schwarzq

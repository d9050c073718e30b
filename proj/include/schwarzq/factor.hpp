#pragma once

#include "schwarzq/types.hpp"

#include <Eigen/Cholesky>

#include <memory>

namespace schwarzq {

/// Rectangular factor F of a local solve H = F F^T, applied matrix-free.
class LocalFactor {
public:
  virtual ~LocalFactor() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  /// F y
  virtual Vec apply(const Vec& y) const = 0;
  /// F^T x
  virtual Vec apply_transpose(const Vec& x) const = 0;
  virtual Mat dense() const;
};

/// F = L^{-T} for a Cholesky factorisation M = L L^T, so F F^T = M^{-1}.
class CholeskyInverseFactor final : public LocalFactor {
public:
  /// Throws std::runtime_error if `spd` is not positive definite.
  explicit CholeskyInverseFactor(const Mat& spd);

  Index rows() const override { return n_; }
  Index cols() const override { return n_; }
  Vec apply(const Vec& y) const override;
  Vec apply_transpose(const Vec& x) const override;

private:
  Index n_;
  Eigen::LLT<Mat> llt_;
};

} // namespace schwarzq

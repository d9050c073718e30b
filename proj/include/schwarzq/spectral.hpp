#pragma once

#include "schwarzq/types.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace schwarzq {

class SplitPreconditioner;

struct SpectralReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double ratio = 0.0;
  int iterations = 0;
  /// Largest relative residual ||Mv - lambda v|| / lambda of the two extremes.
  double residual = 0.0;
  std::string method;
};

class SpectralError : public std::runtime_error {
public:
  SpectralError(const std::string& what, SpectralReport best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const SpectralReport& best() const { return best_; }

private:
  SpectralReport best_;
};

using LinearOperator = std::function<Vec(const Vec&)>;

struct LanczosOptions {
  enum class Target { both, largest };

  double tol = 1e-8;
  /// 0 selects min(5 dim, 2000).
  int max_iterations = 0;
  /// Ritz values below kernel_cutoff * lambda_max count as kernel.
  double kernel_cutoff = 1e-10;
  std::uint64_t seed = 42;
  Target target = Target::both;
};

/**
 * Lanczos with full reorthogonalisation for an operator that is self-adjoint
 * and positive semidefinite in the inner product <x, y> = x^T B y, B given by
 * `inner` (identity when empty).
 *
 * Returns the largest eigenvalue and the smallest one above the kernel cutoff.
 * Throws SpectralError, carrying the best estimates, if either has not
 * converged within the iteration budget.
 */
SpectralReport extreme_eigs(const LinearOperator& op, Index dim, const LanczosOptions& options,
                            const LinearOperator& inner = {});

/// Euclidean variant with default options except the tolerance.
SpectralReport extreme_eigs_sym(const LinearOperator& op, Index dim, double tol = 1e-8);

/// Extreme eigenvalues of H A, Lanczos in the A inner product.
SpectralReport precond_spectrum(const SpMat& A, const SplitPreconditioner& precond,
                                double tol = 1e-8);

/// lambda_max by Lanczos, lambda_min by shift-invert Lanczos (sparse Cholesky).
SpectralReport unpreconditioned_kappa(const SpMat& A, double tol = 1e-8);

} // namespace schwarzq

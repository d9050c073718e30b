#include "schwarzq/spectral.hpp"

#include "schwarzq/preconditioner.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <random>

namespace schwarzq {

namespace {

Vec start_vector(Index dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vec v = Vec::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
  for (Index i = 0; i < dim; ++i) v[i] += 1e-3 * unif(gen);
  return v;
}

struct RitzSummary {
  double theta_max = 0.0;
  double res_max = 0.0;
  double theta_min = 0.0;
  double res_min = 0.0;
  bool have_min = false;
};

RitzSummary ritz(const Vec& alpha, const Vec& beta, Index k, double beta_last, double cutoff) {
  Eigen::SelfAdjointEigenSolver<Mat> es;
  Vec sub = k > 1 ? Vec(beta.head(k - 1)) : Vec();
  es.computeFromTridiagonal(alpha.head(k), sub, Eigen::ComputeEigenvectors);
  const Vec& theta = es.eigenvalues();
  const Mat& s = es.eigenvectors();
  RitzSummary out;
  out.theta_max = theta[k - 1];
  out.res_max = std::abs(beta_last * s(k - 1, k - 1));
  const double floor = cutoff * std::max(out.theta_max, 0.0);
  for (Index i = 0; i < k; ++i) {
    if (theta[i] > floor) {
      out.theta_min = theta[i];
      out.res_min = std::abs(beta_last * s(k - 1, i));
      out.have_min = true;
      break;
    }
  }
  return out;
}

} // namespace

SpectralReport extreme_eigs(const LinearOperator& op, Index dim, const LanczosOptions& options,
                            const LinearOperator& inner) {
  if (dim <= 0) throw std::invalid_argument("Lanczos on an empty operator");
  const bool euclidean = !inner;
  const auto B = [&](const Vec& x) -> Vec { return euclidean ? x : inner(x); };

  int max_it = options.max_iterations > 0 ? options.max_iterations
                                          : static_cast<int>(std::min<Index>(5 * dim, 2000));
  max_it = static_cast<int>(std::min<Index>(max_it, dim));

  Mat V(dim, std::min(max_it + 1, 64));
  Mat BV;
  if (!euclidean) BV.resize(dim, V.cols());
  Vec alpha(max_it), beta(max_it);

  Vec v = start_vector(dim, options.seed);
  Vec Bv = B(v);
  double nrm = std::sqrt(v.dot(Bv));
  V.col(0) = v / nrm;
  if (!euclidean) BV.col(0) = Bv / nrm;

  SpectralReport report;
  report.method = euclidean ? "lanczos-full-reorth" : "lanczos-full-reorth-B-inner";
  RitzSummary last;
  double tnorm = 0.0;

  for (int k = 0; k < max_it; ++k) {
    Vec w = op(V.col(k));
    const auto basis = V.leftCols(k + 1);
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) {
      Vec c = euclidean ? Vec(basis.transpose() * w) : Vec(BV.leftCols(k + 1).transpose() * w);
      if (pass == 0) alpha[k] = c[k];
      else alpha[k] += c[k];
      w.noalias() -= basis * c;
    }
    Vec Bw = B(w);
    const double b = std::sqrt(std::max(w.dot(Bw), 0.0));
    beta[k] = b;
    tnorm = std::max(tnorm, std::abs(alpha[k]) + b + (k > 0 ? beta[k - 1] : 0.0));
    const bool exhausted = b <= 1e-13 * tnorm || k + 1 == max_it;

    const int every = k < 100 ? 1 : 8;
    if (exhausted || (k + 1) % every == 0) {
      last = ritz(alpha, beta, k + 1, b, options.kernel_cutoff);
      report.iterations = k + 1;
      report.lambda_max = last.theta_max;
      report.lambda_min = last.have_min ? last.theta_min : last.theta_max;
      const double rmax = last.res_max / std::abs(last.theta_max);
      const double rmin = last.have_min ? last.res_min / std::abs(last.theta_min) : 0.0;
      report.residual = options.target == LanczosOptions::Target::largest ? rmax
                                                                           : std::max(rmax, rmin);
      const bool done = report.residual <= options.tol &&
                        (options.target == LanczosOptions::Target::largest || last.have_min);
      if (done || exhausted) {
        report.ratio = report.lambda_max / report.lambda_min;
        if (done) return report;
        if (b <= 1e-13 * tnorm) {
          // Invariant Krylov subspace: Ritz values are exact eigenvalues.
          report.residual = 0.0;
          return report;
        }
        throw SpectralError("Lanczos did not converge in " + std::to_string(max_it) +
                                " iterations (residual " + std::to_string(report.residual) + ")",
                            report);
      }
    }

    if (V.cols() < k + 2) {
      const Index grow = std::min<Index>(2 * V.cols(), max_it + 1);
      V.conservativeResize(Eigen::NoChange, grow);
      if (!euclidean) BV.conservativeResize(Eigen::NoChange, grow);
    }
    V.col(k + 1) = w / b;
    if (!euclidean) BV.col(k + 1) = Bw / b;
  }
  throw SpectralError("Lanczos did not converge", report);
}

SpectralReport extreme_eigs_sym(const LinearOperator& op, Index dim, double tol) {
  LanczosOptions o;
  o.tol = tol;
  return extreme_eigs(op, dim, o);
}

SpectralReport precond_spectrum(const SpMat& A, const SplitPreconditioner& precond, double tol) {
  if (A.rows() != precond.rows()) throw std::invalid_argument("preconditioner dimension mismatch");
  LanczosOptions o;
  o.tol = tol;
  auto op = [&](const Vec& x) { return precond.apply(A * x); };
  auto inner = [&](const Vec& x) -> Vec { return A * x; };
  SpectralReport r = extreme_eigs(op, A.rows(), o, inner);
  r.method = "lanczos-A-inner(HA)";
  return r;
}

SpectralReport unpreconditioned_kappa(const SpMat& A, double tol) {
  LanczosOptions o;
  o.tol = tol;
  o.target = LanczosOptions::Target::largest;
  const SpectralReport top = extreme_eigs([&](const Vec& x) -> Vec { return A * x; }, A.rows(), o);

  Eigen::SimplicialLLT<SpMat> chol(A);
  if (chol.info() != Eigen::Success)
    throw std::runtime_error("sparse Cholesky failed: matrix is not positive definite");
  const SpectralReport inv =
      extreme_eigs([&](const Vec& x) -> Vec { return chol.solve(x); }, A.rows(), o);

  SpectralReport r;
  r.lambda_max = top.lambda_max;
  r.lambda_min = 1.0 / inv.lambda_max;
  r.ratio = r.lambda_max / r.lambda_min;
  r.iterations = top.iterations + inv.iterations;
  r.residual = std::max(top.residual, inv.residual);
  r.method = "lanczos+shift-invert";
  return r;
}

} // namespace schwarzq

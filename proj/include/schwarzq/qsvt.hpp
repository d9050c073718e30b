#pragma once

#include "schwarzq/block_encoding.hpp"
#include "schwarzq/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace schwarzq {

/**
 * Odd Chebyshev approximation of 1/x on [1/kappa, 1]:
 *   g(x) = (1 - (1 - x^2)^b) / x truncated after T_{2 j0 + 1},
 *   b = ceil(kappa^2 ln(kappa / eps)),  j0 = ceil(sqrt(b ln(4 b / eps))).
 * p = c_norm g is bounded by 1 on [-1, 1].
 */
struct ChebyshevOddPoly {
  double kappa_eff = 1.0;
  double eps = 0.0;
  long b = 0;
  /// Truncation index j0; the reported degree parameter D.
  int D = 0;
  /// Chebyshev coefficients; entry m multiplies T_m (even entries are zero).
  Vec coeffs;
  double c_norm = 1.0;
  /// max |g| over [-1, 1].
  double sup_raw = 0.0;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  /// g(x), the unnormalised approximant of 1/x.
  double raw(double x) const;
  /// p(x) = c_norm g(x).
  double operator()(double x) const { return c_norm * raw(x); }

  /// Polynomial from explicit odd Chebyshev coefficients, c_norm = 1.
  static ChebyshevOddPoly from_coefficients(Vec coeffs);

  nlohmann::json to_json() const;
};

/// Clenshaw evaluation of sum_m c_m T_m(x).
double chebyshev_eval(const Vec& coeffs, double x);

/// Throws if the degree would exceed 1e5.
ChebyshevOddPoly build_inverse_poly(double kappa_eff, double eps);

/// max over a grid of [1/kappa, 1] of |g(x) - 1/x|.
double inverse_abs_error(const ChebyshevOddPoly& poly, int samples = 20001);
/// max over a grid of [1/kappa, 1] of |x g(x) - 1|.
double inverse_rel_error(const ChebyshevOddPoly& poly, int samples = 20001);

struct SvtResult {
  /// p^(SV)(A / alpha) applied to the state; lives in the row space.
  Vec output;
  double success_prob = 0.0;
  /// Singular values below 1 / (2 kappa_eff), outside the approximation window.
  int out_of_window = 0;
  std::vector<std::string> warnings;
};

/// Ideal post-selected QSVT output for a state given in the column space.
SvtResult apply_svt(const BlockEncoding& be, const ChebyshevOddPoly& poly, const Vec& state);
/// Same, with the state given on the full register; its component outside the
/// column projector must be below 1e-10.
SvtResult apply_svt_full(const BlockEncoding& be, const ChebyshevOddPoly& poly, const Vec& full_state);
/// Dense-matrix variant: A is the encoded matrix, alpha its normalisation.
SvtResult apply_svt_dense(const Mat& A, double alpha, const ChebyshevOddPoly& poly, const Vec& state);

struct InnerProductConfig {
  int level = 4;
  int subdomains = 2;
  double delta = 0.0625;
  double eps = 1e-6;
  int runs = 100;
  long shots = 1000000;
  std::uint64_t seed = 2024;
  double percentile_low = 2.5;
  double percentile_high = 97.5;
};

struct RunReport {
  double Q_ref = 0.0;
  double Q_mean = 0.0;
  double Q_low = 0.0;
  double Q_high = 0.0;
  /// Limit of the estimator for infinitely many shots.
  double Q_exact_prob = 0.0;
  int runs = 0;
  long shots_per_run = 0;
  double kappa_alpha = 0.0;
  double kappa = 0.0;
  double alpha = 0.0;
  double subnormalization = 0.0;
  int degree_parameter = 0;
  int degree = 0;
  double c_norm = 0.0;
  double success_prob = 0.0;
  double rhs_norm_sq = 0.0;
  std::uint64_t seed = 0;
  int out_of_window = 0;
  std::vector<double> estimates;

  nlohmann::json to_json() const;
};

/// d = 1, rho = 1, BPX local solves, no coarse space, w = b.
RunReport solve_inner_product(const InnerProductConfig& config);

/// Linear-interpolated percentile (0..100) of a sample.
double percentile(std::vector<double> values, double pct);

/// Binomial shot counts, one generator per run keyed by (seed, run).
std::vector<long> sample_shots(double prob, long shots, int runs, std::uint64_t seed);

} // namespace schwarzq

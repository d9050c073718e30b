#include "schwarzq/qsvt.hpp"

#include "schwarzq/circuit.hpp"
#include "schwarzq/fem.hpp"
#include "schwarzq/layout.hpp"
#include "schwarzq/preconditioner.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace schwarzq {

double chebyshev_eval(const Vec& c, double x) {
  double b1 = 0.0, b2 = 0.0;
  for (Index m = c.size() - 1; m >= 1; --m) {
    const double b0 = c[m] + 2.0 * x * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return (c.size() ? c[0] : 0.0) + x * b1 - b2;
}

double ChebyshevOddPoly::raw(double x) const { return chebyshev_eval(coeffs, x); }

ChebyshevOddPoly ChebyshevOddPoly::from_coefficients(Vec coeffs) {
  for (Index m = 0; m < coeffs.size(); m += 2)
    if (coeffs[m] != 0.0) throw std::invalid_argument("odd polynomial with an even coefficient");
  ChebyshevOddPoly p;
  p.coeffs = std::move(coeffs);
  p.D = std::max<int>(0, (p.degree() - 1) / 2);
  p.c_norm = 1.0;
  return p;
}

nlohmann::json ChebyshevOddPoly::to_json() const {
  return {{"kappa_eff", kappa_eff}, {"eps", eps},   {"b", b},
          {"D", D},                 {"degree", degree()}, {"c_norm", c_norm},
          {"sup_raw", sup_raw}};
}

namespace {

double sup_abs(const ChebyshevOddPoly& p) {
  // Chebyshev grid, then a golden-section polish around the best node.
  const int n = 10 * std::max(p.degree(), 1);
  double best = 0.0, at = 0.0;
  std::vector<double> nodes(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double x = std::cos(std::numbers::pi * (k + 0.5) / n);
    nodes[static_cast<std::size_t>(k)] = x;
    const double v = std::abs(p.raw(x));
    if (v > best) {
      best = v;
      at = k;
    }
  }
  const int k = static_cast<int>(at);
  double lo = k + 1 < n ? nodes[static_cast<std::size_t>(k + 1)] : -1.0;
  double hi = k > 0 ? nodes[static_cast<std::size_t>(k - 1)] : 1.0;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - gr * (hi - lo), c = lo + gr * (hi - lo);
  for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
    if (std::abs(p.raw(a)) > std::abs(p.raw(c))) {
      hi = c;
    } else {
      lo = a;
    }
    a = hi - gr * (hi - lo);
    c = lo + gr * (hi - lo);
  }
  best = std::max({best, std::abs(p.raw(a)), std::abs(p.raw(c)), std::abs(p.raw(1.0))});
  return best;
}

} // namespace

ChebyshevOddPoly build_inverse_poly(double kappa_eff, double eps) {
  if (!(kappa_eff >= 1.0)) throw std::invalid_argument("kappa_eff must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0, 1)");
  const double bd = std::ceil(kappa_eff * kappa_eff * std::log(kappa_eff / eps));
  const double jd = std::ceil(std::sqrt(bd * std::log(4.0 * bd / eps)));
  if (2.0 * jd + 1.0 > 1e5) throw std::invalid_argument("eps too small: polynomial degree beyond 1e5");
  const long b = std::max<long>(1, static_cast<long>(bd));
  const int j0 = static_cast<int>(jd);

  // tail[k] = 2^{-2b} sum_{i >= k} C(2b, b + i)
  std::vector<double> tail(static_cast<std::size_t>(b + 2), 0.0);
  const double lg2b = std::lgamma(2.0 * b + 1.0);
  for (long i = b; i >= 0; --i) {
    const double logp = lg2b - std::lgamma(double(b + i) + 1.0) - std::lgamma(double(b - i) + 1.0) -
                        2.0 * b * std::numbers::ln2;
    tail[static_cast<std::size_t>(i)] = tail[static_cast<std::size_t>(i + 1)] + std::exp(logp);
  }

  ChebyshevOddPoly p;
  p.kappa_eff = kappa_eff;
  p.eps = eps;
  p.b = b;
  p.D = j0;
  p.coeffs = Vec::Zero(2 * j0 + 2);
  for (int j = 0; j <= j0; ++j) {
    const double t = j + 1 <= b ? tail[static_cast<std::size_t>(j + 1)] : 0.0;
    p.coeffs[2 * j + 1] = 4.0 * (j % 2 ? -1.0 : 1.0) * t;
  }
  p.sup_raw = sup_abs(p);
  p.c_norm = 1.0 / p.sup_raw;
  return p;
}

double inverse_abs_error(const ChebyshevOddPoly& poly, int samples) {
  double worst = 0.0;
  const double a = 1.0 / poly.kappa_eff;
  for (int k = 0; k < samples; ++k) {
    const double x = a + (1.0 - a) * k / (samples - 1);
    worst = std::max(worst, std::abs(poly.raw(x) - 1.0 / x));
  }
  return worst;
}

double inverse_rel_error(const ChebyshevOddPoly& poly, int samples) {
  double worst = 0.0;
  const double a = 1.0 / poly.kappa_eff;
  for (int k = 0; k < samples; ++k) {
    const double x = a + (1.0 - a) * k / (samples - 1);
    worst = std::max(worst, std::abs(x * poly.raw(x) - 1.0));
  }
  return worst;
}

SvtResult apply_svt_dense(const Mat& A, double alpha, const ChebyshevOddPoly& poly, const Vec& state) {
  if (state.size() != A.cols()) throw std::invalid_argument("apply_svt: state has the wrong length");
  Eigen::JacobiSVD<Mat> svd(A / alpha, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  SvtResult r;
  Vec ps(s.size());
  const double window = 1.0 / (2.0 * poly.kappa_eff);
  for (Index k = 0; k < s.size(); ++k) {
    ps[k] = poly(s[k]);
    if (s[k] < window && s[k] > 1e-12 * (s.size() ? s[0] : 1.0)) ++r.out_of_window;
  }
  if (r.out_of_window > 0)
    r.warnings.push_back(std::to_string(r.out_of_window) +
                         " singular values below 1/(2 kappa_eff), outside the approximation window");
  // Odd p: p^(SV)(W S V^T) = W p(S) V^T; zero singular values map to zero.
  r.output = svd.matrixU() * (ps.asDiagonal() * (svd.matrixV().transpose() * state));
  r.success_prob = r.output.squaredNorm();
  return r;
}

SvtResult apply_svt(const BlockEncoding& be, const ChebyshevOddPoly& poly, const Vec& state) {
  if (state.size() != be.cols()) throw std::invalid_argument("apply_svt: state has the wrong length");
  return apply_svt_dense(be.encoded(), be.alpha, poly, state);
}

SvtResult apply_svt_full(const BlockEncoding& be, const ChebyshevOddPoly& poly, const Vec& full_state) {
  if (full_state.size() != be.dim()) throw std::invalid_argument("apply_svt: register size mismatch");
  Vec inside(be.cols());
  Vec rest = full_state;
  for (Index c = 0; c < be.cols(); ++c) {
    const Index idx = be.col_idx[static_cast<std::size_t>(c)];
    inside[c] = full_state[idx];
    rest[idx] = 0.0;
  }
  if (rest.norm() > 1e-10) throw std::invalid_argument("state is not in the column subspace");
  return apply_svt(be, poly, inside);
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - w) + values[hi] * w;
}

std::vector<long> sample_shots(double prob, long shots, int runs, std::uint64_t seed) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
  std::vector<long> counts;
  counts.reserve(static_cast<std::size_t>(runs));
  for (int run = 0; run < runs; ++run) {
    std::seed_seq key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(run)};
    std::mt19937_64 gen(key);
    std::binomial_distribution<long> dist(shots, prob);
    counts.push_back(dist(gen));
  }
  return counts;
}

nlohmann::json RunReport::to_json() const {
  return {{"Q_ref", Q_ref},
          {"Q_mean", Q_mean},
          {"Q_2.5", Q_low},
          {"Q_97.5", Q_high},
          {"Q_exact_prob", Q_exact_prob},
          {"runs", runs},
          {"shots_per_run", shots_per_run},
          {"kappa_alpha", kappa_alpha},
          {"kappa", kappa},
          {"alpha", alpha},
          {"subnormalization", subnormalization},
          {"D", degree_parameter},
          {"degree", degree},
          {"c_norm", c_norm},
          {"success_prob", success_prob},
          {"rhs_norm_sq", rhs_norm_sq},
          {"seed", seed},
          {"out_of_window", out_of_window}};
}

RunReport solve_inner_product(const InnerProductConfig& cfg) {
  if (cfg.runs < 1 || cfg.shots < 1) throw std::invalid_argument("runs and shots must be positive");
  MeshSpec mesh{1, cfg.level, {cfg.subdomains}, cfg.delta};
  mesh.validate();
  const SubdomainLayout layout = build_layout(mesh);
  const SpMat A = assemble_stiffness(mesh, Coefficient::identity(mesh));
  const Vec b = assemble_rhs(mesh, Source::constant(1.0));

  PreconditionerOptions opt;
  opt.flavor = Flavor::as1;
  opt.local = LocalSolver::bpx;
  opt.use_coarse = false;
  const SplitPreconditioner P = build_preconditioner(A, layout, opt);

  // Block-encoding of C F: concatenation of prolongation * (C_i F_i) blocks.
  const MeshSpec unit = unit_hypercube(1, cfg.level);
  const Mat CiFi = Mat(factorize_gradient(unit)) * P.local_factor(0).dense();
  const double alpha_i = std::sqrt(4.0 * mesh.dim * mesh.level);
  const BlockEncoding local = encode_dilation(CiFi, alpha_i);
  std::vector<BlockEncoding> blocks;
  for (int i = 0; i < layout.count(); ++i)
    blocks.push_back(compose_product(encode_prolongation(layout, i), local));
  const BlockEncoding CF = compose_concat_columns(blocks);
  const BlockEncoding M = transpose(CF); // F^T C^T

  const Mat Md = M.encoded();
  Eigen::JacobiSVD<Mat> svd(Md);
  const Vec& s = svd.singularValues();
  double smin = s[0];
  for (Index k = 0; k < s.size(); ++k)
    if (s[k] > 1e-10 * s[0]) smin = s[k];

  RunReport rep;
  rep.alpha = M.alpha;
  rep.kappa = s[0] / smin;
  rep.subnormalization = M.alpha / s[0];
  rep.kappa_alpha = rep.kappa * rep.subnormalization;

  const ChebyshevOddPoly poly = build_inverse_poly(rep.kappa_alpha, cfg.eps);
  rep.degree_parameter = poly.D;
  rep.degree = poly.degree();
  rep.c_norm = poly.c_norm;

  const Vec bt = P.apply_Ftilde_T(b);
  rep.rhs_norm_sq = bt.squaredNorm();
  // p^(SV)(C F / alpha) approximates c_norm alpha (F^T C^T)^+.
  const SvtResult svt = apply_svt_dense(Md.transpose(), M.alpha, poly, bt / bt.norm());
  rep.success_prob = svt.success_prob;
  rep.out_of_window = svt.out_of_window;
  if (!(svt.success_prob > 0.0)) throw std::runtime_error("zero success probability");
  const double scale = rep.rhs_norm_sq / std::pow(poly.c_norm * M.alpha, 2);
  rep.Q_exact_prob = svt.success_prob * scale;

  Eigen::SimplicialLLT<SpMat> chol(A);
  rep.Q_ref = b.dot(chol.solve(b));

  rep.runs = cfg.runs;
  rep.shots_per_run = cfg.shots;
  rep.seed = cfg.seed;
  for (long hits : sample_shots(svt.success_prob, cfg.shots, cfg.runs, cfg.seed))
    rep.estimates.push_back(static_cast<double>(hits) / static_cast<double>(cfg.shots) * scale);
  double sum = 0.0;
  for (double q : rep.estimates) sum += q;
  rep.Q_mean = sum / static_cast<double>(rep.estimates.size());
  rep.Q_low = percentile(rep.estimates, cfg.percentile_low);
  rep.Q_high = percentile(rep.estimates, cfg.percentile_high);
  return rep;
}

} // namespace schwarzq

#include "oracles.hpp"

#include "schwarzq/fem.hpp"
#include "schwarzq/qsvt.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace schwarzq;

TEST_SUITE("qsvt") {

TEST_CASE("Clenshaw evaluation of Chebyshev series") {
  Vec c(4);
  c << 0, 0, 0, 1;
  for (double x : {-1.0, -0.3, 0.0, 0.7, 1.0}) CHECK(chebyshev_eval(c, x) == doctest::Approx(4 * x * x * x - 3 * x));
  CHECK(chebyshev_eval(Vec::Zero(0), 0.5) == 0.0);
  Vec c0(1);
  c0 << 2.5;
  CHECK(chebyshev_eval(c0, 0.1) == 2.5);
}

TEST_CASE("toy polynomial p(x) = x^3") {
  Vec c(4);
  c << 0, 0.75, 0, 0.25;
  const ChebyshevOddPoly p = ChebyshevOddPoly::from_coefficients(c);
  CHECK(p.degree() == 3);
  CHECK(p.D == 1);
  for (double x : {-0.9, 0.2, 0.5}) CHECK(p(x) == doctest::Approx(x * x * x));

  // Singular value transform of a rectangular matrix with known SVD.
  std::mt19937_64 gen(3);
  const Mat U = Eigen::HouseholderQR<Mat>(oracle::random_matrix(4, 4, gen)).householderQ();
  const Mat V = Eigen::HouseholderQR<Mat>(oracle::random_matrix(3, 3, gen)).householderQ();
  Mat S = Mat::Zero(4, 3);
  S(0, 0) = 0.9;
  S(1, 1) = 0.5;
  S(2, 2) = 0.1;
  const Mat A = U * S * V.transpose();
  const Vec x = oracle::random_vector(3, gen);
  const SvtResult r = apply_svt_dense(2.0 * A, 2.0, p, x);
  const Vec expected = U * S.array().cube().matrix() * V.transpose() * x;
  CHECK((r.output - expected).norm() < 1e-13);
  CHECK(r.success_prob == doctest::Approx(expected.squaredNorm()));

  Vec even(3);
  even << 0.1, 1, 0;
  CHECK_THROWS_AS(ChebyshevOddPoly::from_coefficients(even), std::invalid_argument);
}

TEST_CASE("inverse polynomial parameters") {
  const ChebyshevOddPoly p = build_inverse_poly(10.0, 1e-3);
  CHECK(p.b == static_cast<long>(std::ceil(100.0 * std::log(1e4))));
  CHECK(p.D == static_cast<int>(std::ceil(std::sqrt(p.b * std::log(4.0 * p.b / 1e-3)))));
  CHECK(p.degree() == 2 * p.D + 1);
  for (Index m = 0; m < p.coeffs.size(); m += 2) CHECK(p.coeffs[m] == 0.0);
  CHECK(p.to_json()["degree"].get<int>() == p.degree());

  CHECK_THROWS_AS(build_inverse_poly(0.5, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(build_inverse_poly(10.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_inverse_poly(1e4, 1e-12), std::invalid_argument);
}

TEST_CASE("inverse polynomial is odd, bounded and accurate") {
  for (double kappa : {2.0, 5.0, 20.0})
    for (double eps : {1e-2, 1e-4, 1e-6}) {
      CAPTURE(kappa);
      CAPTURE(eps);
      const ChebyshevOddPoly p = build_inverse_poly(kappa, eps);
      double sup = 0.0;
      for (int k = 0; k <= 4000; ++k) {
        const double x = -1.0 + k / 2000.0;
        CHECK(p(-x) == doctest::Approx(-p(x)).epsilon(1e-12));
        sup = std::max(sup, std::abs(p(x)));
      }
      CHECK(sup <= 1.0 + 1e-9);
      CHECK(sup >= 0.999);
      CHECK(inverse_abs_error(p) <= 2.0 * eps);
      CHECK(inverse_rel_error(p) <= 2.0 * eps);
    }
}

TEST_CASE("QSVT output approaches the pseudo-inverse") {
  std::mt19937_64 gen(21);
  const Mat A = oracle::random_matrix(6, 4, gen);
  const Vec s = Eigen::JacobiSVD<Mat>(A).singularValues();
  const double alpha = 1.5 * s[0];
  const double kappa = alpha / s[s.size() - 1];
  const ChebyshevOddPoly p = build_inverse_poly(kappa, 1e-8);
  const Vec x = oracle::random_vector(4, gen);
  const SvtResult r = apply_svt_dense(A, alpha, p, x);
  CHECK(r.out_of_window == 0);
  CHECK(r.warnings.empty());
  // p(A / alpha) x ~ c_norm alpha (A^T)^+ x.
  const Vec expected = p.c_norm * alpha * oracle::pinv(A.transpose()) * x;
  CHECK((r.output - expected).norm() <= 1e-6 * expected.norm());
}

TEST_CASE("singular values below the window are reported") {
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = 0.01;
  const ChebyshevOddPoly p = build_inverse_poly(5.0, 1e-3);
  const SvtResult r = apply_svt_dense(A, 1.0, p, Vec::Ones(2));
  CHECK(r.out_of_window == 1);
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("block-encoded QSVT") {
  std::mt19937_64 gen(22);
  const Mat M = oracle::random_matrix(3, 5, gen);
  const BlockEncoding be = encode_dilation(M, 4.0);
  const ChebyshevOddPoly p = build_inverse_poly(8.0, 1e-4);
  const Vec x = oracle::random_vector(5, gen);
  const SvtResult a = apply_svt(be, p, x);
  const SvtResult b = apply_svt_full(be, p, be.lift_column(x));
  CHECK((a.output - b.output).norm() < 1e-14);
  CHECK((a.output - apply_svt_dense(M, 4.0, p, x).output).norm() < 1e-12);
  Vec outside = be.lift_column(x);
  outside[be.dim() - 1] = 1e-3;
  CHECK_THROWS_AS(apply_svt_full(be, p, outside), std::invalid_argument);
  CHECK_THROWS_AS(apply_svt(be, p, Vec::Ones(3)), std::invalid_argument);
}

TEST_CASE("percentiles interpolate linearly") {
  const std::vector<double> v{4, 1, 3, 2};
  CHECK(percentile(v, 0) == 1.0);
  CHECK(percentile(v, 100) == 4.0);
  CHECK(percentile(v, 50) == 2.5);
  CHECK(percentile(v, 25) == doctest::Approx(1.75));
  CHECK(percentile({7.0}, 97.5) == 7.0);
  CHECK_THROWS(percentile({}, 50));
}

TEST_CASE("shot sampling is reproducible and unbiased") {
  const auto a = sample_shots(0.3, 100000, 50, 2024);
  const auto b = sample_shots(0.3, 100000, 50, 2024);
  const auto c = sample_shots(0.3, 100000, 50, 2025);
  CHECK(a == b);
  CHECK(a != c);
  double mean = 0.0;
  for (long k : a) mean += static_cast<double>(k) / 50.0;
  CHECK(mean == doctest::Approx(30000.0).epsilon(0.005));
  // Run r does not depend on how many runs are drawn.
  CHECK(sample_shots(0.3, 100000, 10, 2024)[9] == a[9]);
  CHECK(sample_shots(0.0, 10, 3, 1) == std::vector<long>{0, 0, 0});
  CHECK_THROWS(sample_shots(1.5, 10, 1, 1));
}

TEST_CASE("sampled inner product on a small instance") {
  InnerProductConfig cfg;
  cfg.level = 3;
  cfg.subdomains = 2;
  cfg.delta = 0.125;
  cfg.runs = 40;
  cfg.shots = 200000;
  const RunReport r = solve_inner_product(cfg);

  const MeshSpec m{1, 3, {2}, 0.125};
  const SpMat A = assemble_stiffness(m, Coefficient::identity(m));
  const Vec b = assemble_rhs(m, Source::constant(1.0));
  const double exact = b.dot(Mat(A).llt().solve(b));
  CHECK(r.Q_ref == doctest::Approx(exact).epsilon(1e-12));
  CHECK(r.Q_exact_prob == doctest::Approx(exact).epsilon(1e-4));
  CHECK(r.Q_mean == doctest::Approx(exact).epsilon(0.01));
  CHECK(r.Q_low <= r.Q_mean);
  CHECK(r.Q_mean <= r.Q_high);
  CHECK(r.estimates.size() == 40);
  CHECK(r.degree == 2 * r.degree_parameter + 1);
  CHECK(r.kappa_alpha == doctest::Approx(r.kappa * r.subnormalization));

  cfg.runs = 0;
  CHECK_THROWS_AS(solve_inner_product(cfg), std::invalid_argument);
}

} // TEST_SUITE

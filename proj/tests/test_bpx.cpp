#include "oracles.hpp"

#include "schwarzq/bpx.hpp"
#include "schwarzq/fem.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace schwarzq;

TEST_SUITE("bpx") {

TEST_CASE("1D interpolation stencil") {
  const Mat I = Mat(interpolation_1d(1));
  REQUIRE(I.rows() == 3);
  REQUIRE(I.cols() == 1);
  CHECK(I(0, 0) == 0.5);
  CHECK(I(1, 0) == 1.0);
  CHECK(I(2, 0) == 0.5);

  const Mat I2 = Mat(interpolation_1d(2));
  CHECK(I2.rows() == 7);
  CHECK(I2.cols() == 3);
  CHECK(I2.colwise().sum().minCoeff() == 2.0);
}

TEST_CASE("d = 1, L = 2 factor") {
  const BpxFactor F = build_bpx(2, 1);
  REQUIRE(F.blocks().size() == 2);
  CHECK(F.rows() == 3);
  CHECK(F.cols() == 4);
  Mat expected(3, 4);
  const double s1 = std::pow(2.0, -0.5), s2 = 0.5;
  expected << 0.5 * s1, s2, 0, 0,
              1.0 * s1, 0, s2, 0,
              0.5 * s1, 0, 0, s2;
  CHECK((F.dense() - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("level embeddings compose and tensorise") {
  const Mat E13 = Mat(level_embedding(1, 3, 1));
  CHECK((E13 - Mat(interpolation_1d(2)) * Mat(interpolation_1d(1))).norm() < 1e-15);
  // Interpolating a hat keeps its nodal values at coarse nodes.
  CHECK(E13(3, 0) == 1.0);
  CHECK(E13(1, 0) == 0.5);

  const Mat E2 = Mat(level_embedding(1, 2, 2));
  CHECK((E2 - oracle::kron(Mat(level_embedding(1, 2, 1)), Mat(level_embedding(1, 2, 1)))).norm() < 1e-15);
  CHECK(Mat(level_embedding(2, 2, 3)).isIdentity());
  CHECK_THROWS_AS(level_embedding(3, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_bpx(0, 1), std::invalid_argument);
}

TEST_CASE("apply and apply_transpose agree with the dense factor") {
  std::mt19937_64 gen(7);
  for (int d : {1, 2, 3})
    for (int L = 1; L <= (d == 3 ? 2 : 4); ++L) {
      const BpxFactor F = build_bpx(L, d);
      const Mat D = F.dense();
      CHECK(D.rows() == static_cast<Index>(std::pow((1 << L) - 1, d)));
      const Vec y = oracle::random_vector(F.cols(), gen);
      const Vec x = oracle::random_vector(F.rows(), gen);
      CHECK((F.apply(y) - D * y).norm() <= 1e-13 * (1 + y.norm()));
      CHECK((F.apply_transpose(x) - D.transpose() * x).norm() <= 1e-13 * (1 + x.norm()));
      CHECK_THROWS_AS(F.apply(x.head(F.rows() - 1)), std::invalid_argument);
    }
}

TEST_CASE("BPX spectral bounds grow mildly with the level") {
  double prev_ratio = 0.0;
  for (int L = 2; L <= 6; ++L) {
    const MeshSpec m = unit_hypercube(1, L);
    const SpMat A = assemble_stiffness(m, Coefficient::identity(m));
    const BpxFactor F = build_bpx(L, 1);
    const BpxBounds b = bpx_spectral_bounds(A, F);
    CHECK(b.mu_min > 0.5);
    CHECK(b.mu_max < 4.0 * L + 4.0);
    const double ratio = b.mu_max / b.mu_min;
    CHECK(ratio >= prev_ratio * 0.99);
    prev_ratio = ratio;

    // Lanczos agrees with a dense oracle on F^T A F.
    const Mat D = F.dense();
    const auto [lo, hi] = oracle::nonzero_extremes(oracle::jacobi_eigenvalues(D.transpose() * Mat(A) * D));
    CHECK(b.mu_min == doctest::Approx(lo).epsilon(1e-6));
    CHECK(b.mu_max == doctest::Approx(hi).epsilon(1e-6));
  }
}

TEST_CASE("BPX condition number plateaus in one dimension") {
  std::vector<double> ratio;
  for (int L = 3; L <= 5; ++L) {
    const MeshSpec m = unit_hypercube(1, L);
    const BpxBounds b = bpx_spectral_bounds(assemble_stiffness(m, Coefficient::identity(m)), build_bpx(L, 1));
    ratio.push_back(b.mu_max / b.mu_min);
  }
  CHECK(std::abs(ratio[1] / ratio[0] - 1.0) < 0.25);
  CHECK(std::abs(ratio[2] / ratio[1] - 1.0) < 0.25);

  // L = 1: a single dof, so mu_min = mu_max.
  const MeshSpec one = unit_hypercube(1, 1);
  const BpxBounds b1 = bpx_spectral_bounds(assemble_stiffness(one, Coefficient::identity(one)), build_bpx(1, 1));
  CHECK(b1.mu_min == doctest::Approx(b1.mu_max));
  CHECK(b1.mu_min == doctest::Approx(2.0));
}

TEST_CASE("BPX in two dimensions is uniformly bounded") {
  for (int L = 2; L <= 4; ++L) {
    const MeshSpec m = unit_hypercube(2, L);
    const BpxBounds b = bpx_spectral_bounds(assemble_stiffness(m, Coefficient::identity(m)), build_bpx(L, 2));
    CHECK(b.mu_max / b.mu_min < 10.0 * L);
  }
}

} // TEST_SUITE

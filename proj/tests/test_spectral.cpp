#include "oracles.hpp"

#include "schwarzq/fem.hpp"
#include "schwarzq/layout.hpp"
#include "schwarzq/preconditioner.hpp"
#include "schwarzq/spectral.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace schwarzq;

TEST_SUITE("spectral") {

TEST_CASE("Jacobi oracle agrees with Eigen") {
  std::mt19937_64 gen(1);
  for (int n : {1, 2, 5, 17, 40}) {
    const Mat G = oracle::random_matrix(n, n, gen);
    const Mat S = G + G.transpose();
    const Vec mine = oracle::jacobi_eigenvalues(S);
    const Vec eig = Eigen::SelfAdjointEigenSolver<Mat>(S).eigenvalues();
    CHECK((mine - eig).cwiseAbs().maxCoeff() < 1e-10 * (1 + eig.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("Lanczos on a diagonal operator") {
  Vec d(50);
  for (int i = 0; i < 50; ++i) d[i] = 1.0 + i;
  const SpectralReport r = extreme_eigs_sym([&](const Vec& x) -> Vec { return d.cwiseProduct(x); }, 50);
  CHECK(r.lambda_min == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.lambda_max == doctest::Approx(50.0).epsilon(1e-8));
  CHECK(r.ratio == doctest::Approx(50.0).epsilon(1e-7));
}

TEST_CASE("Lanczos skips the kernel of a semidefinite operator") {
  std::mt19937_64 gen(4);
  const Mat B = oracle::random_matrix(30, 12, gen);
  const Mat S = B * B.transpose();  // rank 12
  const SpectralReport r = extreme_eigs_sym([&](const Vec& x) -> Vec { return S * x; }, 30);
  const auto [lo, hi] = oracle::nonzero_extremes(oracle::jacobi_eigenvalues(S));
  CHECK(r.lambda_min == doctest::Approx(lo).epsilon(1e-7));
  CHECK(r.lambda_max == doctest::Approx(hi).epsilon(1e-7));
}

TEST_CASE("Lanczos in a weighted inner product") {
  std::mt19937_64 gen(8);
  const Mat G = oracle::random_matrix(20, 20, gen);
  const Mat B = G * G.transpose() + 20 * Mat::Identity(20, 20);
  const Vec w = Vec::LinSpaced(20, 1.0, 3.0);
  // W^-1 B is self-adjoint in <x, y> = x^T W y.
  const Mat M = w.cwiseInverse().asDiagonal() * B;
  LanczosOptions opt;
  const SpectralReport r = extreme_eigs([&](const Vec& x) -> Vec { return M * x; }, 20, opt,
                                        [&](const Vec& x) -> Vec { return w.cwiseProduct(x); });
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(B, Mat(w.asDiagonal()));
  CHECK(r.lambda_min == doctest::Approx(ges.eigenvalues().minCoeff()).epsilon(1e-7));
  CHECK(r.lambda_max == doctest::Approx(ges.eigenvalues().maxCoeff()).epsilon(1e-7));
}

TEST_CASE("unpreconditioned condition number matches the closed form") {
  for (int L = 3; L <= 6; ++L) {
    const MeshSpec m = unit_hypercube(1, L);
    const SpectralReport r = unpreconditioned_kappa(assemble_stiffness(m, Coefficient::identity(m)));
    const Index n = m.num_dofs();
    const double h = m.h();
    auto lam = [&](Index k) { return 4.0 / h * std::pow(std::sin(k * M_PI / (2.0 * (n + 1))), 2); };
    CHECK(r.lambda_min == doctest::Approx(lam(1)).epsilon(1e-7));
    CHECK(r.lambda_max == doctest::Approx(lam(n)).epsilon(1e-7));
  }
}

TEST_CASE("preconditioned spectrum matches a dense oracle") {
  const MeshSpec m{2, 2, {2, 2}, 0.25};
  const SpMat A = assemble_stiffness(m, Coefficient::identity(m));
  const SubdomainLayout lay = build_layout(m);
  for (Flavor f : {Flavor::as2, Flavor::hybrid})
    for (LocalSolver s : {LocalSolver::exact, LocalSolver::bpx}) {
      const SplitPreconditioner P(A, lay, {f, s, true, CoarseKind::partition_of_unity});
      const SpectralReport r = precond_spectrum(A, P);
      const Mat F = P.dense_Ftilde();
      const auto [lo, hi] = oracle::nonzero_extremes(oracle::jacobi_eigenvalues(F.transpose() * Mat(A) * F));
      CHECK(r.lambda_min == doctest::Approx(lo).epsilon(1e-6));
      CHECK(r.lambda_max == doctest::Approx(hi).epsilon(1e-6));
      CHECK(r.residual < 1e-6);
    }
}

TEST_CASE("a tight iteration budget raises SpectralError with estimates") {
  const MeshSpec m = unit_hypercube(1, 7);
  const SpMat A = assemble_stiffness(m, Coefficient::identity(m));
  LanczosOptions opt;
  opt.max_iterations = 3;
  try {
    extreme_eigs([&](const Vec& x) -> Vec { return A * x; }, A.rows(), opt);
    FAIL("expected SpectralError");
  } catch (const SpectralError& e) {
    CHECK(e.best().lambda_max > 0.0);
  }
  CHECK_THROWS_AS(extreme_eigs_sym([](const Vec& x) { return x; }, 0), std::invalid_argument);
}

TEST_CASE("Lanczos is deterministic") {
  const MeshSpec m = unit_hypercube(2, 3);
  const SpMat A = assemble_stiffness(m, Coefficient::identity(m));
  const SpectralReport a = extreme_eigs_sym([&](const Vec& x) -> Vec { return A * x; }, A.rows());
  const SpectralReport b = extreme_eigs_sym([&](const Vec& x) -> Vec { return A * x; }, A.rows());
  CHECK(a.lambda_min == b.lambda_min);
  CHECK(a.lambda_max == b.lambda_max);
  CHECK(a.iterations == b.iterations);
}

} // TEST_SUITE

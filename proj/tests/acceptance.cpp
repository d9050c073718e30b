// Acceptance checks. One line per criterion; exit status is the number of
// failed criteria.

#include "oracles.hpp"

#include "schwarzq/block_encoding.hpp"
#include "schwarzq/bpx.hpp"
#include "schwarzq/circuit.hpp"
#include "schwarzq/experiments.hpp"
#include "schwarzq/fem.hpp"
#include "schwarzq/layout.hpp"
#include "schwarzq/preconditioner.hpp"
#include "schwarzq/qsvt.hpp"
#include "schwarzq/spectral.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

using namespace schwarzq;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& title, double budget_s, const std::function<void(Outcome&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    out.pass = false;
    out.detail << " [runtime " << secs << " s over budget " << budget_s << " s]";
  }
  if (!out.pass) ++failures;
  std::cout << "criterion " << id << ": " << (out.pass ? "PASS" : "FAIL") << "  " << title << "  ("
            << std::fixed << std::setprecision(2) << secs << " s)" << std::defaultfloat << std::setprecision(6)
            << out.detail.str() << std::endl;
}

void table_criterion(Outcome& out, int which) {
  const TableResult t = run_table(which);
  write_table_diff(std::cout, t);
  out.detail << " " << t.failures() << " failing cell(s)";
  for (const auto& row : t.rows)
    for (const auto& c : row.cells)
      if (!c.informational) out.require(c.pass, row.label + "/" + c.column);
}

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double spectral_norm(const Mat& m) { return Eigen::JacobiSVD<Mat>(m).singularValues()[0]; }

// BE(C F)^T BE(D) BE(C F) with BPX or exact local blocks.
struct AssembledEncoding {
  BlockEncoding be;
  double alpha_formula = 0.0;
  double alpha_bar = 0.0;
  double bound_blocks = 0.0; // kappa(D) abar(D) (sum abar_i^2 + abar_0^2)
  double reconstruction = 0.0;
  double mu_max = 0.0;
};

AssembledEncoding assemble_encoding(const MeshSpec& mesh, bool coarse, LocalSolver local) {
  const SubdomainLayout layout = build_layout(mesh);
  const SpMat A = assemble_stiffness(mesh, Coefficient::identity(mesh));
  PreconditionerOptions opt{coarse ? Flavor::as2 : Flavor::as1, local, coarse,
                            coarse ? CoarseKind::partition_of_unity : CoarseKind::none};
  const SplitPreconditioner P(A, layout, opt);
  const Mat C = Mat(factorize_gradient(mesh));
  const Mat Cloc = Mat(factorize_gradient(unit_hypercube(mesh.dim, mesh.level)));

  AssembledEncoding r;
  const double alpha_i = std::sqrt(4.0 * mesh.dim * mesh.level);
  std::vector<BlockEncoding> blocks;
  double sum_alpha_sq = 0.0, sum_abar_sq = 0.0;
  for (int i = 0; i < layout.count(); ++i) {
    const Mat CiFi = Cloc * P.local_factor(i).dense();
    const double norm = spectral_norm(CiFi);
    r.mu_max = std::max(r.mu_max, norm * norm);
    blocks.push_back(compose_product(encode_prolongation(layout, i), encode_dilation(CiFi, alpha_i)));
    sum_alpha_sq += alpha_i * alpha_i;
    sum_abar_sq += std::pow(alpha_i / norm, 2);
  }
  if (coarse) {
    const Mat CZF0 = C * Mat(P.coarse_basis()) * P.coarse_factor().dense();
    const double norm = spectral_norm(CZF0);
    const double alpha0 = norm * (1.0 + 1e-6);
    blocks.push_back(encode_dilation(CZF0, alpha0));
    sum_alpha_sq += alpha0 * alpha0;
    sum_abar_sq += std::pow(alpha0 / norm, 2);
  }
  const BlockEncoding CF = compose_concat_columns(blocks);
  const Mat D = Mat(coefficient_operator(mesh, Coefficient::identity(mesh)));
  const double alpha_D = spectral_norm(D);
  const BlockEncoding BD = encode_dilation(D, alpha_D);
  r.be = compose_product(transpose(CF), compose_product(BD, CF));
  r.alpha_formula = alpha_D * sum_alpha_sq;

  const Mat F = P.dense_Ftilde();
  const Mat target = F.transpose() * Mat(A) * F;
  r.reconstruction = reconstruction_error(r.be, target);
  r.alpha_bar = r.be.alpha / spectral_norm(target);
  const double kappa_D = 1.0, abar_D = alpha_D / spectral_norm(D);
  r.bound_blocks = kappa_D * abar_D * sum_abar_sq;
  return r;
}

} // namespace

int main() {
  std::cout << std::setprecision(6);

  criterion(1, "factorised assembly A = C^T (D (x) I) C", 5.0, [](Outcome& out) {
    std::mt19937_64 gen(1);
    double worst = 0.0;
    for (int d : {1, 2})
      for (int L = 1; L <= 5; ++L) {
        const MeshSpec m{d, L, std::vector<int>(static_cast<std::size_t>(d), 2), std::ldexp(1.0, -L - 1)};
        std::vector<Mat> blocks;
        for (Index e = 0; e < m.num_elements(); ++e) {
          const Mat G = oracle::random_matrix(d, d, gen);
          blocks.push_back(G * G.transpose() + 0.1 * Mat::Identity(d, d));
        }
        for (const Coefficient& rho : {Coefficient::identity(m), Coefficient::tensors(m, blocks)}) {
          const SpMat A = assemble_stiffness(m, rho);
          const SpMat C = factorize_gradient(m);
          const SpMat rebuilt = SpMat(C.transpose()) * coefficient_operator(m, rho) * C;
          const double err = max_abs(Mat(A) - Mat(rebuilt)) / max_abs(Mat(A));
          worst = std::max(worst, err);
          out.require(err <= 1e-12, "d=" + std::to_string(d) + " L=" + std::to_string(L));
        }
      }
    out.detail << " worst relative error " << worst;
  });

  criterion(2, "two-dimensional scalability table (20 cells, rel 2%)", 600.0,
            [](Outcome& out) { table_criterion(out, 1); });
  criterion(3, "refinement table (9 cells, rel 2%)", 300.0, [](Outcome& out) { table_criterion(out, 2); });
  criterion(4, "overlap table (12 cells, rel 2%)", 300.0, [](Outcome& out) { table_criterion(out, 3); });

  criterion(5, "spectral bounds and inexact sandwich", 120.0, [](Outcome& out) {
    const double slack = 1e-6;
    double worst_max = 0.0;
    int sandwiches = 0;
    auto sandwich = [&](const MeshSpec& m, Flavor exact_flavor, bool coarse) {
      const SpMat A = assemble_stiffness(m, Coefficient::identity(m));
      const SubdomainLayout lay = build_layout(m);
      const CoarseKind ck = coarse ? CoarseKind::partition_of_unity : CoarseKind::none;
      const SpectralReport ex = precond_spectrum(A, SplitPreconditioner(A, lay, {exact_flavor, LocalSolver::exact, coarse, ck}));
      const SpectralReport in = precond_spectrum(A, SplitPreconditioner(A, lay, {exact_flavor, LocalSolver::bpx, coarse, ck}));
      const BpxBounds mu = bpx_spectral_bounds(local_stiffness(A, lay, 0), build_bpx(m.level, m.dim));
      const std::string tag = m.describe() + " " + to_string(exact_flavor);
      out.require(in.lambda_min >= ex.lambda_min * std::min(1.0, mu.mu_min) * (1 - slack), "sandwich min " + tag);
      out.require(in.lambda_max <= ex.lambda_max * std::max(1.0, mu.mu_max) * (1 + slack), "sandwich max " + tag);
      ++sandwiches;
      return ex;
    };
    for (int n = 3; n <= 6; ++n) {
      const MeshSpec m{2, 4, {n, n}, 0.0625};
      const SpectralReport ex = sandwich(m, Flavor::as2, true);
      worst_max = std::max(worst_max, ex.lambda_max);
      out.require(ex.lambda_max <= 5.0 * (1 + slack), "lambda_max(H2 A) <= 5 at N=" + std::to_string(n));
    }
    for (int L = 3; L <= 5; ++L) sandwich({2, L, {8, 1}, 0.125}, Flavor::as1, false);
    for (double delta : {1.0 / 32, 1.0 / 16, 1.0 / 4}) sandwich({2, 5, {8, 1}, delta}, Flavor::as1, false);
    out.detail << " max lambda_max(H2 A) " << worst_max << ", " << sandwiches << " sandwiches";
  });

  criterion(6, "block-encoding constants of F^T A F", 60.0, [](Outcome& out) {
    // C_1 from the BPX block norms: abar_i^2 = 4 d L / mu_max <= d (L + C_d).
    double C1 = 0.0;
    for (int L = 2; L <= 4; ++L) {
      const MeshSpec u = unit_hypercube(1, L);
      const BpxBounds mu = bpx_spectral_bounds(assemble_stiffness(u, Coefficient::identity(u)), build_bpx(L, 1));
      C1 = std::max(C1, 4.0 * L / mu.mu_max - L);
    }
    out.detail << " C_1 = " << C1;

    std::map<std::pair<int, int>, double> growth;
    for (int L = 2; L <= 4; ++L)
      for (int N : {2, 4})
        for (bool coarse : {false, true}) {
          const MeshSpec m{1, L, {N}, std::ldexp(1.0, -L)};
          const AssembledEncoding e = assemble_encoding(m, coarse, LocalSolver::bpx);
          const std::string tag = "L=" + std::to_string(L) + " N=" + std::to_string(N) + (coarse ? " coarse" : "");
          out.require(std::abs(e.be.alpha - e.alpha_formula) <= 1e-14 * e.alpha_formula, "alpha formula " + tag);
          out.require(e.reconstruction <= 1e-10, "reconstruction " + tag);
          out.require(e.alpha_bar >= 1.0 - 1e-12, "abar >= 1 " + tag);
          out.require(e.alpha_bar <= e.bound_blocks * (1 + 1e-12), "abar block bound " + tag);
          const double abar0_sq = coarse ? std::pow(1.0 + 1e-6, 2) : 0.0;
          const double linear_bound = N * 1.0 * (L + C1) + abar0_sq;
          out.require(e.alpha_bar <= linear_bound * (1 + 1e-12), "abar N d (L + C_d) bound " + tag);
          if (!coarse) growth[{N, L}] = e.alpha_bar;
        }
    // At most linear growth in N L relative to the smallest instance.
    const double base = growth.at({2, 2}) / 4.0;
    double worst = 0.0;
    for (const auto& [key, abar] : growth) worst = std::max(worst, abar / (key.first * key.second) / base);
    out.require(worst <= 1.0 + 1e-9, "abar grows faster than N L");
    out.detail << ", max abar/(N L) relative to N=2,L=2: " << worst;

    const AssembledEncoding ex = assemble_encoding({1, 2, {2}, 0.25}, true, LocalSolver::exact);
    out.require(ex.reconstruction <= 1e-10, "exact local solves reconstruction");
  });

  criterion(7, "circuit prolongation equals the classical one", 60.0, [](Outcome& out) {
    int layouts = 0, subdomains = 0;
    std::vector<MeshSpec> meshes;
    for (int L = 1; L <= 3; ++L)
      for (int ov = 1; ov < (1 << L); ov *= 2) {
        const double delta = ov / std::ldexp(2.0, L); // ov overlapping elements
        for (int N : {1, 2, 3, 4}) meshes.push_back({1, L, {N}, delta});
        for (auto n : {std::vector<int>{2, 2}, std::vector<int>{3, 2}, std::vector<int>{1, 3}})
          meshes.push_back({2, L, n, delta});
      }
    for (const MeshSpec& m : meshes) {
      try {
        m.validate();
      } catch (const std::invalid_argument&) {
        continue;
      }
      ++layouts;
      const SubdomainLayout lay = build_layout(m);
      const RegisterLayout reg = make_register_layout(m);
      for (int i = 0; i < lay.count(); ++i, ++subdomains) {
        const BlockEncoding be = encode_prolongation(lay, i);
        out.require(reconstruction_error(be, Mat(dg_prolongation(lay, i))) == 0.0, "prolongation " + m.describe());
      }
      for (int t = 0; t < m.dim; ++t) {
        const Prolongation1D p = prolongation_permutation_1d(reg, t);
        const int N = m.subdomains[static_cast<std::size_t>(t)];
        const double expected = N * std::ldexp(1.0, m.level + 1) - std::ldexp(m.delta, m.level + 2) * (N - 1);
        for (int sub = 0; sub < N; ++sub) {
          out.require(static_cast<double>(p.selected_rows(sub).size()) == expected, "row count " + m.describe());
          for (Index x = 0; x < p.dim(); ++x)
            if (!p.comparator_roundtrip(x, sub)) out.require(false, "comparator " + m.describe());
        }
      }
    }
    out.detail << " " << layouts << " layouts, " << subdomains << " subdomains";
  });

  criterion(8, "inner-product table (QSVT emulation with shot sampling)", 600.0,
            [](Outcome& out) { table_criterion(out, 4); });

  criterion(9, "oracle equivalence on small instances", 120.0, [](Outcome& out) {
    std::mt19937_64 gen(5);
    int instances = 0;
    double worst_eig = 0.0, worst_ip = 0.0, worst_svt = 0.0;
    std::vector<MeshSpec> meshes = {{1, 3, {2}, 0.125}, {1, 4, {4}, 0.0625}, {1, 5, {3}, 0.0625},
                                    {2, 2, {2, 2}, 0.25}, {2, 3, {2, 1}, 0.125}, {2, 3, {2, 2}, 0.125},
                                    {2, 2, {3, 3}, 0.25}, {3, 2, {2, 1, 1}, 0.25}};
    for (const MeshSpec& m : meshes) {
      if (m.num_dofs() > 300) continue;
      const SpMat A = assemble_stiffness(m, Coefficient::identity(m));
      const Mat Ad = Mat(A);
      const SubdomainLayout lay = build_layout(m);
      {
        const SpectralReport r = unpreconditioned_kappa(A);
        const Vec ev = oracle::jacobi_eigenvalues(Ad);
        const double e = std::max(std::abs(r.lambda_min / ev[0] - 1), std::abs(r.lambda_max / ev[ev.size() - 1] - 1));
        worst_eig = std::max(worst_eig, e);
        out.require(e <= 1e-6, "unpreconditioned " + m.describe());
      }
      for (const PreconditionerOptions& opt :
           {PreconditionerOptions{Flavor::as1, LocalSolver::exact, false, CoarseKind::none},
            PreconditionerOptions{Flavor::as1, LocalSolver::bpx, false, CoarseKind::none},
            PreconditionerOptions{Flavor::as2, LocalSolver::exact, true, CoarseKind::partition_of_unity},
            PreconditionerOptions{Flavor::as2, LocalSolver::bpx, true, CoarseKind::nodal},
            PreconditionerOptions{Flavor::hybrid, LocalSolver::bpx, true, CoarseKind::partition_of_unity}}) {
        if (opt.use_coarse && lay.count() < 2) continue;
        if (opt.use_coarse && coarse_space(lay, opt.coarse).cols() == 0) continue;
        ++instances;
        const std::string tag = m.describe() + " " + to_string(opt.flavor) + "/" + to_string(opt.local);
        const SplitPreconditioner P(A, lay, opt);
        const Mat F = P.dense_Ftilde();
        const Mat S = F.transpose() * Ad * F;
        const auto [lo, hi] = oracle::nonzero_extremes(oracle::jacobi_eigenvalues(S));
        const SpectralReport r = precond_spectrum(A, P);
        const double e = std::max(std::abs(r.lambda_min / lo - 1), std::abs(r.lambda_max / hi - 1));
        worst_eig = std::max(worst_eig, e);
        out.require(e <= 1e-6, "Lanczos " + tag);

        // [M^+ w~]^T [M^+ b~] = w^T A^-1 b with M = F^T C^T, b~ = F^T b.
        const Mat C = Mat(factorize_gradient(m));
        const Mat M = F.transpose() * C.transpose();
        const Mat Mp = oracle::pinv(M, 1e-10);
        const Vec b = oracle::random_vector(A.rows(), gen), w = oracle::random_vector(A.rows(), gen);
        const double lhs = (Mp * (F.transpose() * w)).dot(Mp * (F.transpose() * b));
        const double rhs = w.dot(Ad.llt().solve(b));
        const double ip = std::abs(lhs - rhs) / std::abs(rhs);
        worst_ip = std::max(worst_ip, ip);
        out.require(ip <= 1e-9, "inner product " + tag);

        // QSVT output against the dense pseudo-inverse, all singular values in window.
        const Vec s = Eigen::JacobiSVD<Mat>(M).singularValues();
        double smin = s[0];
        for (Index k = 0; k < s.size(); ++k)
          if (s[k] > 1e-10 * s[0]) smin = s[k];
        const double alpha = 1.25 * s[0];
        const ChebyshevOddPoly poly = build_inverse_poly(alpha / smin, 1e-8);
        const Vec x = C * oracle::random_vector(A.rows(), gen);
        const SvtResult svt = apply_svt_dense(M, alpha, poly, x);
        const Vec expected = poly.c_norm * alpha * oracle::pinv(M.transpose(), 1e-10) * x;
        const double se = (svt.output - expected).norm() / expected.norm();
        worst_svt = std::max(worst_svt, se);
        out.require(se <= 1e-5 && svt.out_of_window == 0, "qsvt " + tag);
      }
    }
    out.detail << " " << instances << " instances; worst Lanczos " << worst_eig << ", inner product " << worst_ip
               << ", qsvt " << worst_svt;
  });

  std::cout << (failures ? std::to_string(failures) + " criterion(s) failed" : "all criteria pass") << std::endl;
  return failures;
}

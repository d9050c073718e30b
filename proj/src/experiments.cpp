#include "schwarzq/experiments.hpp"

#include "schwarzq/bpx.hpp"
#include "schwarzq/circuit.hpp"
#include "schwarzq/fem.hpp"
#include "schwarzq_reference_data.hpp"

#include <Eigen/Eigenvalues>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace schwarzq {

const nlohmann::json& reference_values() {
  static const nlohmann::json data = nlohmann::json::parse(kReferenceJson);
  return data;
}

const char* build_revision() { return kBuildRevision; }

bool TableResult::all_pass() const { return failures() == 0; }

int TableResult::failures() const {
  int n = 0;
  for (const auto& r : rows)
    for (const auto& c : r.cells)
      if (!c.informational && !c.pass) ++n;
  return n;
}

int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SCHWARZQ_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex guard;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(guard);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

bool within_rel(double value, double ref, double rel) {
  return std::abs(value - ref) <= rel * std::abs(ref);
}

bool same_sig_figs(double value, double ref, int digits) {
  auto round_sig = [digits](double x) {
    if (x == 0.0) return 0.0;
    const double scale = std::pow(10.0, digits - 1 - std::floor(std::log10(std::abs(x))));
    return std::round(x * scale) / scale;
  };
  return std::abs(round_sig(value) - round_sig(ref)) <= 1e-12 * std::abs(ref);
}

namespace {

struct SpectralJob {
  MeshSpec mesh;
  bool unpreconditioned = false;
  PreconditionerOptions precond;
};

double spectral_ratio(const SpectralJob& job, double tol) {
  const SpMat A = assemble_stiffness(job.mesh, Coefficient::identity(job.mesh));
  if (job.unpreconditioned) return unpreconditioned_kappa(A, tol).ratio;
  const SubdomainLayout layout = build_layout(job.mesh);
  const SplitPreconditioner P = build_preconditioner(A, layout, job.precond);
  return precond_spectrum(A, P, tol).ratio;
}

PreconditionerOptions column_options(const std::string& column) {
  PreconditionerOptions o;
  const auto sep = column.find('_');
  o.flavor = flavor_from_string(column.substr(0, sep));
  o.local = local_solver_from_string(column.substr(sep + 1));
  o.use_coarse = o.flavor != Flavor::as1;
  return o;
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

nlohmann::json base_provenance(const TableOptions& opt, int threads) {
  return {{"revision", build_revision()},
          {"reference_version", reference_values().value("version", 0)},
          {"lanczos", {{"tol", opt.tol}, {"start_seed", 42}, {"kernel_cutoff", 1e-10}}},
          {"coarse_space", to_string(CoarseKind::partition_of_unity)},
          {"threads", threads}};
}

TableResult spectral_table(int which, const TableOptions& opt) {
  const nlohmann::json& ref = reference_values()["table" + std::to_string(which)];
  const double rel = reference_values()["tolerances"]["spectral_rel"].get<double>();
  TableResult out;
  out.id = which;
  out.description = ref["description"].get<std::string>();
  out.columns = ref["columns"].get<std::vector<std::string>>();

  std::vector<SpectralJob> jobs;
  for (const auto& row : ref["rows"]) {
    TableRow tr;
    MeshSpec mesh;
    if (which == 1) {
      const int N = row["N"].get<int>();
      mesh = MeshSpec{2, 4, {N, N}, 0.0625};
      tr.label = std::to_string(N) + "x" + std::to_string(N);
      tr.params = {{"N", {N, N}}};
    } else if (which == 2) {
      const int L = row["L"].get<int>();
      mesh = MeshSpec{2, L, {8, 1}, 0.125};
      tr.label = "L=" + std::to_string(L);
      tr.params = {{"L", L}};
    } else {
      const double delta = row["delta"].get<double>();
      mesh = MeshSpec{2, 5, {8, 1}, delta};
      tr.label = "delta=2^" + std::to_string(static_cast<int>(std::lround(std::log2(delta))));
      tr.params = {{"delta", delta}};
    }
    tr.params["d"] = mesh.dim;
    tr.params["L"] = mesh.level;
    tr.params["N"] = mesh.subdomains;
    tr.params["delta"] = mesh.delta;
    const auto refs = row["values"].get<std::vector<double>>();
    for (std::size_t c = 0; c < out.columns.size(); ++c) {
      SpectralJob job{mesh, out.columns[c] == "unpreconditioned", {}};
      if (!job.unpreconditioned) job.precond = column_options(out.columns[c]);
      jobs.push_back(job);
      Cell cell;
      cell.column = out.columns[c];
      cell.reference = refs[c];
      cell.rule = "rel " + fmt(100.0 * rel) + "%";
      tr.cells.push_back(cell);
    }
    out.rows.push_back(std::move(tr));
  }

  const int threads = worker_count(opt.threads);
  std::vector<double> values(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), threads,
               [&](int k) { values[static_cast<std::size_t>(k)] = spectral_ratio(jobs[static_cast<std::size_t>(k)], opt.tol); });

  std::size_t k = 0;
  for (auto& row : out.rows)
    for (auto& cell : row.cells) {
      cell.value = values[k++];
      cell.pass = within_rel(cell.value, *cell.reference, rel);
    }
  out.provenance = base_provenance(opt, threads);
  return out;
}

TableResult inner_product_table(const TableOptions& opt) {
  const nlohmann::json& refs = reference_values();
  const nlohmann::json& ref = refs["table4"];
  const auto& tol = refs["tolerances"];
  TableResult out;
  out.id = 4;
  out.description = ref["description"].get<std::string>();
  out.columns = {"kappa_alpha", "D", "degree", "Q_ref", "Q_mean", "Q_2.5", "Q_97.5", "Q_exact"};

  std::vector<int> sizes;
  for (const auto& row : ref["rows"]) sizes.push_back(row["N1"].get<int>());
  std::vector<RunReport> reports(sizes.size());
  const int threads = worker_count(opt.threads);
  parallel_for(static_cast<int>(sizes.size()), threads, [&](int k) {
    InnerProductConfig cfg;
    cfg.subdomains = sizes[static_cast<std::size_t>(k)];
    cfg.eps = opt.eps;
    cfg.runs = opt.runs;
    cfg.shots = opt.shots;
    cfg.seed = opt.seed;
    reports[static_cast<std::size_t>(k)] = solve_inner_product(cfg);
  });

  const double rel_kappa = tol["kappa_alpha_rel"].get<double>();
  const double factor = tol["degree_factor"].get<double>();
  const int sig = tol["q_ref_sig_figs"].get<int>();
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const auto v = ref["rows"][k]["values"].get<std::vector<double>>();
    const RunReport& r = reports[k];
    TableRow tr;
    tr.label = "N1=" + std::to_string(sizes[k]);
    tr.params = {{"d", 1}, {"L", 4}, {"N", {sizes[k]}}, {"delta", 0.0625}, {"eps", opt.eps},
                 {"runs", opt.runs}, {"shots", opt.shots}, {"seed", opt.seed}};
    auto add = [&](const std::string& col, double value, std::optional<double> refv, std::string rule,
                   bool pass, bool info) {
      tr.cells.push_back(Cell{col, value, refv, std::move(rule), pass, info});
    };
    add("kappa_alpha", r.kappa_alpha, v[0], "rel " + fmt(100.0 * rel_kappa) + "%",
        within_rel(r.kappa_alpha, v[0], rel_kappa), false);
    add("D", r.degree_parameter, v[1], "factor " + fmt(factor),
        r.degree_parameter <= factor * v[1] && r.degree_parameter >= v[1] / factor, false);
    add("degree", r.degree, std::nullopt, "2D+1", true, true);
    add("Q_ref", r.Q_ref, v[2], std::to_string(sig) + " sig figs", same_sig_figs(r.Q_ref, v[2], sig), false);
    add("Q_mean", r.Q_mean, v[3], "in [" + fmt(v[4]) + ", " + fmt(v[5]) + "]",
        r.Q_mean >= v[4] && r.Q_mean <= v[5], false);
    add("Q_2.5", r.Q_low, v[4], "info", true, true);
    add("Q_97.5", r.Q_high, v[5], "info", true, true);
    add("Q_exact", r.Q_exact_prob, std::nullopt, "infinite shots", true, true);
    out.rows.push_back(std::move(tr));
  }
  out.provenance = base_provenance(opt, threads);
  out.provenance["sampling"] = {{"seed", opt.seed},
                                {"runs", opt.runs},
                                {"shots", opt.shots},
                                {"generator", "mt19937_64 per run, seed_seq(seed, run)"},
                                {"percentiles", {2.5, 97.5}}};
  out.provenance["eps"] = opt.eps;
  return out;
}

} // namespace

TableResult run_table(int which, const TableOptions& options) {
  if (which >= 1 && which <= 3) return spectral_table(which, options);
  if (which == 4) return inner_product_table(options);
  throw std::invalid_argument("unknown table " + std::to_string(which) + " (expected 1, 2, 3 or 4)");
}

void write_table_csv(std::ostream& os, const TableResult& t) {
  os << "row";
  for (const auto& c : t.columns) os << ',' << c;
  os << '\n';
  for (const auto& r : t.rows) {
    os << r.label;
    for (const auto& c : r.cells) os << ',' << fmt(c.value);
    os << '\n';
  }
}

void write_table_diff(std::ostream& os, const TableResult& t) {
  os << "table " << t.id << ": " << t.description << '\n';
  for (const auto& r : t.rows) {
    for (const auto& c : r.cells) {
      os << "  " << std::left << std::setw(14) << r.label << std::setw(18) << c.column << std::right
         << std::setw(12) << fmt(c.value);
      if (c.reference) {
        os << "  ref " << std::setw(9) << fmt(*c.reference);
        if (!c.informational && *c.reference != 0.0)
          os << "  (" << std::showpos << fmt(100.0 * (c.value - *c.reference) / *c.reference, 3)
             << std::noshowpos << "%)";
      }
      os << "  [" << c.rule << "] " << (c.informational ? "INFO" : (c.pass ? "PASS" : "FAIL")) << '\n';
    }
  }
  if (t.id == 4) os << "  percentile columns are the 2.5 and 97.5 percentiles over runs\n";
  os << "  " << (t.all_pass() ? "all cells pass" : std::to_string(t.failures()) + " cell(s) fail") << '\n';
}

nlohmann::json table_json(const TableResult& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) {
      nlohmann::json jc = {{"column", c.column}, {"value", c.value}, {"rule", c.rule},
                           {"pass", c.pass}, {"informational", c.informational}};
      if (c.reference) jc["reference"] = *c.reference;
      cells.push_back(jc);
    }
    rows.push_back({{"label", r.label}, {"params", r.params}, {"cells", cells}});
  }
  return {{"table", t.id},
          {"description", t.description},
          {"columns", t.columns},
          {"rows", rows},
          {"all_pass", t.all_pass()},
          {"provenance", t.provenance}};
}

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  mesh.validate();
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("eigensolver tolerance must lie in (0, 1)");
  if (precond.flavor == Flavor::as1 && precond.use_coarse)
    throw std::invalid_argument("as1 is one-level: use coarse off");
  if (precond.flavor == Flavor::hybrid && !precond.use_coarse)
    throw std::invalid_argument("hyb needs the coarse space");
  if (qsvt) {
    if (mesh.dim != 1) throw std::invalid_argument("the qsvt pipeline supports d = 1 only");
    if (!(qsvt_params.eps > 0.0 && qsvt_params.eps < 1.0)) throw std::invalid_argument("qsvt eps must lie in (0, 1)");
    if (qsvt_params.runs < 1 || qsvt_params.shots < 1)
      throw std::invalid_argument("qsvt runs and shots must be positive");
  }
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.mesh.dim = j.value("d", 1);
  c.mesh.level = j.value("L", 2);
  c.mesh.subdomains = j.value("N", std::vector<int>(static_cast<std::size_t>(c.mesh.dim), 1));
  c.mesh.delta = j.value("delta", 0.25);
  c.precond.flavor = flavor_from_string(j.value("precond", std::string("as2")));
  c.precond.local = local_solver_from_string(j.value("local", std::string("exact")));
  const std::string coarse = j.value("coarse", std::string(c.precond.flavor == Flavor::as1 ? "off" : "on"));
  if (coarse != "on" && coarse != "off") throw std::invalid_argument("coarse must be on or off");
  c.precond.use_coarse = coarse == "on";
  c.precond.coarse = coarse_kind_from_string(j.value("coarse_space", std::string("pou")));
  c.tol = j.value("tol", 1e-8);
  c.output = j.value("output", std::string());
  if (j.contains("qsvt")) {
    const auto& q = j["qsvt"];
    c.qsvt = q.value("enabled", true);
    c.qsvt_params.eps = q.value("eps", 1e-6);
    c.qsvt_params.runs = q.value("runs", 100);
    c.qsvt_params.shots = q.value("shots", 1000000L);
    c.qsvt_params.seed = q.value("seed", std::uint64_t{2024});
  }
  c.qsvt_params.level = c.mesh.level;
  c.qsvt_params.subdomains = c.mesh.subdomains.empty() ? 1 : c.mesh.subdomains.front();
  c.qsvt_params.delta = c.mesh.delta;
  c.validate();
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = {{"d", mesh.dim},
                      {"L", mesh.level},
                      {"N", mesh.subdomains},
                      {"delta", mesh.delta},
                      {"precond", to_string(precond.flavor)},
                      {"local", to_string(precond.local)},
                      {"coarse", precond.use_coarse ? "on" : "off"},
                      {"coarse_space", to_string(precond.coarse)},
                      {"tol", tol}};
  if (qsvt)
    j["qsvt"] = {{"enabled", true},
                 {"eps", qsvt_params.eps},
                 {"runs", qsvt_params.runs},
                 {"shots", qsvt_params.shots},
                 {"seed", qsvt_params.seed}};
  return j;
}

namespace {

nlohmann::json report_json(const SpectralReport& r) {
  return {{"lambda_min", r.lambda_min}, {"lambda_max", r.lambda_max}, {"ratio", r.ratio},
          {"iterations", r.iterations}, {"residual", r.residual},     {"method", r.method}};
}

} // namespace

nlohmann::json run_solve(const ExperimentConfig& cfg) {
  cfg.validate();
  const MeshSpec& mesh = cfg.mesh;
  const SubdomainLayout layout = build_layout(mesh);
  const SpMat A = assemble_stiffness(mesh, Coefficient::identity(mesh));
  const SplitPreconditioner P = build_preconditioner(A, layout, cfg.precond);

  nlohmann::json out = {{"config", cfg.to_json()}, {"revision", build_revision()}};
  out["mesh"] = {{"dofs", mesh.num_dofs()},
                 {"elements", mesh.num_elements()},
                 {"subdomains", layout.count()},
                 {"coloring_constant", layout.coloring_constant()}};
  out["preconditioner"] = {{"flavor", to_string(P.flavor())},
                           {"local", to_string(P.local_solver())},
                           {"coarse_columns", P.has_coarse() ? P.coarse_basis().cols() : 0},
                           {"split_columns", P.cols()}};
  out["unpreconditioned"] = report_json(unpreconditioned_kappa(A, cfg.tol));
  out["preconditioned"] = report_json(precond_spectrum(A, P, cfg.tol));
  if (cfg.precond.local == LocalSolver::bpx) {
    const BpxBounds mu = bpx_spectral_bounds(local_stiffness(A, layout, 0), P.local_factor(0), cfg.tol);
    out["bpx"] = {{"mu_min", mu.mu_min}, {"mu_max", mu.mu_max}};
  }
  if (cfg.qsvt) {
    RunReport r = solve_inner_product(cfg.qsvt_params);
    out["qsvt"] = r.to_json();
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Vec random_vec(Index n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(gen);
  return v;
}

CheckResult check(const std::string& name, bool pass, const std::string& detail) {
  return {name, pass, detail};
}

} // namespace

std::vector<CheckResult> run_invariant_suite() {
  std::vector<CheckResult> out;
  std::mt19937_64 gen(7);

  // Factorised assembly.
  {
    double worst = 0.0;
    for (int d : {1, 2})
      for (int L = 1; L <= 4; ++L) {
        MeshSpec m{d, L, std::vector<int>(static_cast<std::size_t>(d), 2), std::ldexp(1.0, -L - 1)};
        const SpMat A = assemble_stiffness(m, Coefficient::identity(m));
        const SpMat C = factorize_gradient(m);
        const SpMat D = coefficient_operator(m, Coefficient::identity(m));
        const Mat diff = Mat(A) - Mat(SpMat(C.transpose()) * D * C);
        worst = std::max(worst, diff.cwiseAbs().maxCoeff() / Mat(A).cwiseAbs().maxCoeff());
      }
    out.push_back(check("factorised assembly", worst <= 1e-12, "max rel " + fmt(worst, 3)));
  }

  MeshSpec m2{2, 3, {3, 2}, 0.125};
  const SubdomainLayout lay2 = build_layout(m2);
  const SpMat A2 = assemble_stiffness(m2, Coefficient::identity(m2));

  // Split factor adjointness and dense oracle.
  for (Flavor fl : {Flavor::as1, Flavor::as2, Flavor::hybrid})
    for (LocalSolver ls : {LocalSolver::exact, LocalSolver::bpx}) {
      PreconditionerOptions o;
      o.flavor = fl;
      o.local = ls;
      o.use_coarse = fl != Flavor::as1;
      const SplitPreconditioner P = build_preconditioner(A2, lay2, o);
      const Vec x = random_vec(P.rows(), gen), y = random_vec(P.cols(), gen);
      const double adj = std::abs(P.apply_Ftilde(y).dot(x) - y.dot(P.apply_Ftilde_T(x))) /
                         (P.apply_Ftilde(y).norm() * x.norm());
      const Mat H = P.dense_H();
      const double oracle = (P.apply(x) - H * x).norm() / (H * x).norm();
      const std::string tag = std::string(to_string(fl)) + "/" + to_string(ls);
      out.push_back(check("adjoint F, F^T " + tag, adj <= 1e-13, fmt(adj, 3)));
      out.push_back(check("F F^T = H " + tag, oracle <= 1e-12, fmt(oracle, 3)));
    }

  // Lanczos against a dense eigensolver.
  {
    PreconditionerOptions o;
    o.local = LocalSolver::bpx;
    const SplitPreconditioner P = build_preconditioner(A2, lay2, o);
    const Mat F = P.dense_Ftilde();
    const Mat S = F.transpose() * Mat(A2) * F;
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    const Vec& ev = es.eigenvalues();
    double lo = ev[ev.size() - 1];
    for (Index k = 0; k < ev.size(); ++k)
      if (ev[k] > 1e-10 * ev[ev.size() - 1]) {
        lo = ev[k];
        break;
      }
    const SpectralReport r = precond_spectrum(A2, P);
    const double err = std::max(std::abs(r.lambda_min - lo) / lo,
                                std::abs(r.lambda_max - ev[ev.size() - 1]) / ev[ev.size() - 1]);
    out.push_back(check("Lanczos vs dense split spectrum", err <= 1e-6, "rel " + fmt(err, 3)));
  }

  // Upper bound of the two-level method.
  {
    MeshSpec m{2, 4, {3, 3}, 0.0625};
    const SpMat A = assemble_stiffness(m, Coefficient::identity(m));
    const SubdomainLayout lay = build_layout(m);
    const SplitPreconditioner P = build_preconditioner(A, lay, {});
    const double lmax = precond_spectrum(A, P).lambda_max;
    out.push_back(check("lambda_max(H2 A) <= N_C + 1", lmax <= lay.coloring_constant() + 1.0 + 1e-8,
                        fmt(lmax) + " vs " + std::to_string(lay.coloring_constant() + 1)));
  }

  // Circuit prolongation against the classical one.
  {
    bool ok = true;
    for (const MeshSpec& m : {MeshSpec{1, 2, {2}, 0.25}, MeshSpec{2, 2, {2, 2}, 0.25}, MeshSpec{2, 3, {4, 2}, 0.125}}) {
      const SubdomainLayout lay = build_layout(m);
      for (int i = 0; i < lay.count(); ++i) {
        const Mat enc = encode_prolongation(lay, i).encoded();
        ok = ok && (enc - Mat(dg_prolongation(lay, i))).cwiseAbs().maxCoeff() == 0.0;
      }
    }
    out.push_back(check("circuit prolongation == DG prolongation", ok, ok ? "exact" : "mismatch"));
  }

  // Block-encoding algebra.
  {
    const Mat X = Mat::Random(3, 4), Y = Mat::Random(4, 2);
    const BlockEncoding bx = encode_dilation(X, 2.0 * X.norm()), by = encode_dilation(Y, 1.5 * Y.norm());
    const BlockEncoding p = compose_product(bx, by);
    const double e1 = reconstruction_error(p, X * Y);
    Mat cat(3, 8);
    cat << X, X;
    const BlockEncoding c = compose_concat_columns({bx, bx});
    const double e2 = reconstruction_error(c, cat);
    const bool alpha_ok = std::abs(p.alpha - bx.alpha * by.alpha) <= 1e-14 * p.alpha &&
                          std::abs(c.alpha - std::sqrt(2.0) * bx.alpha) <= 1e-14 * c.alpha;
    out.push_back(check("block-encoding product/concat", e1 <= 1e-11 && e2 <= 1e-11 && alpha_ok,
                        "errors " + fmt(e1, 3) + ", " + fmt(e2, 3)));
  }

  // Odd inverse polynomial.
  {
    const ChebyshevOddPoly p = build_inverse_poly(4.0, 1e-4);
    double odd = 0.0;
    for (int k = 0; k <= 100; ++k) {
      const double x = -1.0 + 0.02 * k;
      odd = std::max(odd, std::abs(p(x) + p(-x)));
    }
    const double err = inverse_abs_error(p);
    out.push_back(check("inverse polynomial", odd <= 1e-14 && err <= 1e-4 && p.sup_raw * p.c_norm <= 1.0 + 1e-12,
                        "abs error " + fmt(err, 3)));
  }
  return out;
}

} // namespace schwarzq

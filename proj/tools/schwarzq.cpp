// schwarzq: reproduce the eigenvalue and inner-product tables, run custom
// configurations, and run the invariant suite.

#include "schwarzq/experiments.hpp"
#include "schwarzq/qsvt.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace schwarzq;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_table(int which, const TableOptions& opt, const std::string& out_dir) {
  const TableResult t = run_table(which, opt);
  write_table_diff(std::cout, t);
  std::ostringstream csv;
  write_table_csv(csv, t);
  const fs::path base = fs::path(out_dir) / ("table" + std::to_string(which));
  write_file(base.string() + ".csv", csv.str());
  write_file(base.string() + ".json", table_json(t).dump(2) + "\n");
  std::cout << "wrote " << base.string() << ".csv and .json\n";
  return t.all_pass() ? 0 : 1;
}

int cmd_table4(const InnerProductConfig& cfg, const std::string& out) {
  const RunReport r = solve_inner_product(cfg);
  std::cout << "N1,kappa_alpha,D,Q_ref,Q_mean,Q_2.5,Q_97.5\n"
            << std::setprecision(6) << cfg.subdomains << ',' << r.kappa_alpha << ',' << r.degree_parameter
            << ',' << r.Q_ref << ',' << r.Q_mean << ',' << r.Q_low << ',' << r.Q_high << '\n';
  nlohmann::json j = r.to_json();
  j["config"] = {{"L", cfg.level}, {"N1", cfg.subdomains}, {"delta", cfg.delta}, {"eps", cfg.eps},
                 {"runs", cfg.runs}, {"shots", cfg.shots}, {"seed", cfg.seed}};
  j["revision"] = build_revision();
  if (!out.empty()) write_file(out, j.dump(2) + "\n");
  return 0;
}

int cmd_solve(const std::string& config_path, const std::string& out_override) {
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot read " + config_path);
  const ExperimentConfig cfg = ExperimentConfig::from_json(nlohmann::json::parse(in));
  const nlohmann::json report = run_solve(cfg);
  const std::string out = out_override.empty() ? cfg.output : out_override;
  if (out.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    write_file(out, report.dump(2) + "\n");
    std::cout << "ratio " << report["preconditioned"]["ratio"].get<double>() << ", wrote " << out << '\n';
  }
  return 0;
}

int cmd_check() {
  int failed = 0;
  for (const CheckResult& c : run_invariant_suite()) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  (" << c.detail << ")\n";
    if (!c.pass) ++failed;
  }
  std::cout << (failed ? std::to_string(failed) + " check(s) failed" : "all checks pass") << '\n';
  return failed ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-level additive Schwarz preconditioning with emulated block-encodings"};
  app.require_subcommand(1);

  TableOptions topt;
  int which = 1;
  std::string out_dir = ".";
  auto* table = app.add_subcommand("table", "reproduce one of the reference tables");
  table->add_option("which", which, "table id")->required()->check(CLI::Range(1, 4));
  table->add_option("--out-dir", out_dir, "directory for the CSV and JSON outputs");
  table->add_option("--tol", topt.tol, "Lanczos tolerance");
  table->add_option("--threads", topt.threads, "worker threads (default SCHWARZQ_THREADS or 1)");
  table->add_option("--runs", topt.runs, "table 4: sampling runs");
  table->add_option("--shots", topt.shots, "table 4: shots per run");
  table->add_option("--eps", topt.eps, "table 4: QSVT accuracy");
  table->add_option("--seed", topt.seed, "table 4: sampling seed");

  InnerProductConfig qcfg;
  std::string q_out;
  auto* table4 = app.add_subcommand("table4", "one row of the inner-product experiment");
  table4->add_option("--L", qcfg.level, "refinement level")->check(CLI::Range(1, 8));
  table4->add_option("--N1", qcfg.subdomains, "number of subdomains")->check(CLI::PositiveNumber);
  table4->add_option("--delta", qcfg.delta, "overlap half-width");
  table4->add_option("--runs", qcfg.runs, "sampling runs")->check(CLI::PositiveNumber);
  table4->add_option("--shots", qcfg.shots, "shots per run")->check(CLI::PositiveNumber);
  table4->add_option("--eps", qcfg.eps, "QSVT accuracy");
  table4->add_option("--seed", qcfg.seed, "sampling seed");
  table4->add_option("--out", q_out, "JSON report path");

  std::string config_path, solve_out;
  auto* solve = app.add_subcommand("solve", "run a configuration given as JSON");
  solve->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
  solve->add_option("--out", solve_out, "report path (overrides the config)");

  auto* check = app.add_subcommand("check", "run the invariant suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*table) return cmd_table(which, topt, out_dir);
    if (*table4) return cmd_table4(qcfg, q_out);
    if (*solve) return cmd_solve(config_path, solve_out);
    if (*check) return cmd_check();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

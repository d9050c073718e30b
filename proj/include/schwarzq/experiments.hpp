#pragma once

#include "schwarzq/layout.hpp"
#include "schwarzq/preconditioner.hpp"
#include "schwarzq/qsvt.hpp"
#include "schwarzq/spectral.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace schwarzq {

/// Reference values shipped with the library (data/reference_values.json).
const nlohmann::json& reference_values();
/// Commit the library was configured from, or "unknown".
const char* build_revision();

struct Cell {
  std::string column;
  double value = 0.0;
  std::optional<double> reference;
  /// Human readable acceptance rule, e.g. "rel 2%".
  std::string rule;
  bool pass = true;
  /// Informational cells are printed but never fail.
  bool informational = false;
};

struct TableRow {
  std::string label;
  nlohmann::json params;
  std::vector<Cell> cells;
};

struct TableResult {
  int id = 0;
  std::string description;
  std::vector<std::string> columns;
  std::vector<TableRow> rows;
  nlohmann::json provenance;

  bool all_pass() const;
  int failures() const;
};

struct TableOptions {
  double tol = 1e-8;
  /// 0: SCHWARZQ_THREADS or 1.
  int threads = 0;
  // Table 4 only.
  int runs = 100;
  long shots = 1000000;
  double eps = 1e-6;
  std::uint64_t seed = 2024;
};

/// Worker count: explicit request, else SCHWARZQ_THREADS, else 1.
int worker_count(int requested = 0);

/// Runs fn(0..n-1) on up to `threads` workers. Exceptions are rethrown.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

TableResult run_table(int which, const TableOptions& options = {});

/// Relative difference check |value - ref| <= rel |ref|.
bool within_rel(double value, double ref, double rel);
/// Agreement after rounding both to `digits` significant figures.
bool same_sig_figs(double value, double ref, int digits);

/// Comma separated, 6 significant digits, one line per table row.
void write_table_csv(std::ostream& os, const TableResult& table);
/// Side-by-side comparison with pass/fail per cell.
void write_table_diff(std::ostream& os, const TableResult& table);
nlohmann::json table_json(const TableResult& table);

/// User-level description of one run of the pipeline.
struct ExperimentConfig {
  MeshSpec mesh;
  PreconditionerOptions precond;
  double tol = 1e-8;
  bool qsvt = false;
  InnerProductConfig qsvt_params;
  std::string output;

  /// Throws std::invalid_argument on the first violated constraint.
  void validate() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Spectral report of the configured preconditioner and, when enabled and
/// d = 1, the sampled inner product.
nlohmann::json run_solve(const ExperimentConfig& config);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Fast invariant suite on small instances.
std::vector<CheckResult> run_invariant_suite();

} // namespace schwarzq

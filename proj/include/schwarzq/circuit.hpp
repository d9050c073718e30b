#pragma once

#include "schwarzq/block_encoding.hpp"
#include "schwarzq/layout.hpp"
#include "schwarzq/types.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace schwarzq {

class SplitPreconditioner;

/**
 * Qubit layout of the DG prolongation circuit.
 *
 * Direction t owns a contiguous group of 1 + L + 2 n_t qubits holding, from
 * least to most significant, k_t (1 qubit), j_t (L), i_t (n_t) and
 * itilde_t (n_t), with n_t = ceil(log2 N_t). Groups are stacked with
 * direction 1 least significant; the component register s (ceil(log2 d)
 * qubits) sits on top. Sub-registers are little-endian.
 */
struct RegisterLayout {
  struct Tuple {
    std::vector<Index> k, j, i, itilde;
    Index s = 0;
    bool operator==(const Tuple&) const = default;
  };

  MeshSpec mesh;
  std::vector<int> n;            // n_t
  std::vector<int> group_offset; // first qubit of direction t
  int s_offset = 0;
  int s_qubits = 0;
  int total_qubits = 0;

  int dim() const { return mesh.dim; }
  int level() const { return mesh.level; }
  int group_qubits(int t) const { return 1 + mesh.level + 2 * n[static_cast<std::size_t>(t)]; }
  Index size() const { return Index{1} << total_qubits; }

  Index encode(const Tuple& t) const;
  Tuple decode(Index basis) const;

  /// Index of the direction-t group inside a basis index.
  Index group_value(Index basis, int t) const;

  nlohmann::json to_json() const;
};

/// Throws if the adder shift 2^{L+2} delta is not an integer.
RegisterLayout make_register_layout(const MeshSpec& mesh);

/**
 * One-direction prolongation circuit on the (k, j, i, itilde) group:
 *   |k + 2j + 2^{L+1} i>|itilde> -> |(k + 2j + 2^{L+1} i - 2^{L+2} delta itilde) mod 2^{1+L+n}>|itilde>,
 * the modular map of a Fourier adder, with comparator predicates that select
 * the block of subdomain `sub` (0-based).
 */
struct Prolongation1D {
  int L = 0;
  int n = 0;
  int subdomains = 1;
  Index shift = 0;   // 2^{L+2} delta
  Index modulus = 0; // 2^{1+L+n}
  Index dg_count = 0; // N 2^{L+1} - 2^{L+2} delta (N - 1)
  std::vector<Index> perm; // out[perm[x]] = in[x]

  Index dim() const { return static_cast<Index>(perm.size()); }
  /// itilde == sub and the adder output is below the DG count.
  bool row_selected(Index x, int sub) const;
  /// i == itilde == sub.
  bool col_selected(Index x, int sub) const;
  IndexList selected_rows(int sub) const;
  IndexList selected_cols(int sub) const;

  /// Comparator ancilla emulation: computes the row predicate into a flag,
  /// then uncomputes it. Returns true iff the index and the flag are restored.
  bool comparator_roundtrip(Index x, int sub) const;
};

Prolongation1D prolongation_permutation_1d(const RegisterLayout& layout, int direction);

/// Basis index of global DG dof r (rows) and of local DG dof c of subdomain
/// `multi` (columns), in the row ordering of factorize_gradient().
IndexList dg_row_basis(const RegisterLayout& layout, const std::vector<int>& multi);
IndexList dg_col_basis(const RegisterLayout& layout, const std::vector<int>& multi);

/// Basis indices accepted by the row and column predicates of all directions
/// (and s < d), in increasing order.
IndexList predicate_rows(const RegisterLayout& layout, const std::vector<int>& multi);
IndexList predicate_cols(const RegisterLayout& layout, const std::vector<int>& multi);

/// I_s (x) P_d (x) ... (x) P_1 with projectors ordered like the classical DG
/// prolongation, so the encoded matrix is that prolongation. alpha = 1.
BlockEncoding prolongation_tensor(const RegisterLayout& layout, const std::vector<int>& multi);

/// Block-encoding of the DG prolongation of subdomain i (flat index).
BlockEncoding encode_prolongation(const SubdomainLayout& layout, int i);

struct RhsState {
  /// Normalised |F^T b> on a selector (n+1 qubits) x block (m qubits) space.
  Vec amplitudes;
  int selector_qubits = 0;
  int block_qubits = 0;
  /// norms[0] = ||F0^T Z^T b|| (0 without coarse block), norms[i] = ||F_i^T R_i b||.
  std::vector<double> norms;
  double total_norm = 0.0;
  /// Amplitudes touched by the selector preparation.
  Index selector_amplitudes = 0;

  Index index(Index selector, Index c) const { return (selector << block_qubits) + c; }
};

/// Selector value 0 holds the coarse block, value i the local block i (1-based).
RhsState prepare_rhs_state(const SplitPreconditioner& P, const Vec& b);

/// Inverse of the state layout: F^T b / ||F^T b|| in split-factor order.
Vec flatten_rhs_state(const SplitPreconditioner& P, const RhsState& state);

} // namespace schwarzq

#pragma once

#include "schwarzq/types.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace schwarzq {

/// Largest dense unitary leaf.
inline constexpr Index kMaxDenseLeaf = Index{1} << 14;
/// Largest composite unitary (applied matrix-free).
inline constexpr Index kMaxEncodingDim = Index{1} << 18;
/// Largest unitary written by dump_unitary().
inline constexpr Index kMaxDumpDim = Index{1} << 12;

class Operator;
using OpPtr = std::shared_ptr<const Operator>;

/**
 * Real orthogonal operator on C^dim, stored as a tree of structured factors.
 * Leaves are dense matrices or permutations; inner nodes are Kronecker
 * products, direct sums and sequential products.
 */
class Operator {
public:
  virtual ~Operator() = default;
  virtual Index dim() const = 0;
  /// out = U in. `out` is resized by the callee.
  virtual void apply(const Vec& in, Vec& out) const = 0;
  virtual OpPtr transpose() const = 0;
  virtual std::string kind() const = 0;

  Vec operator*(const Vec& in) const {
    Vec out;
    apply(in, out);
    return out;
  }
  /// Dense matrix, only for dim <= kMaxDenseLeaf.
  Mat dense() const;
};

OpPtr make_dense(Mat U);
OpPtr make_identity(Index n);
/// out[perm[i]] = in[i].
OpPtr make_permutation(std::vector<Index> perm);
/// slow (x) fast: index = i_slow * fast.dim() + i_fast.
OpPtr make_kron(OpPtr slow, OpPtr fast);
/// op on the first op.dim() coordinates of C^dim, identity on the rest.
OpPtr make_padded(OpPtr op, Index dim);
/// Direct sum on C^{K} (x) C^{P}: block s gets ops[s], identity for s >= ops.size().
OpPtr make_select(std::vector<OpPtr> ops, Index selector_dim);
/// ops[0] applied first, ops.back() last.
OpPtr make_sequence(std::vector<OpPtr> ops);

/// Max |U^T U - I| measured on the given columns (all columns when empty).
double unitarity_defect(const Operator& U, const IndexList& columns = {});

/**
 * Projected unitary encoding A = alpha * Pi_row U Pi_col^T. Projectors are
 * coordinate selections: row r of A is basis state row_idx[r] of U.
 */
struct BlockEncoding {
  double alpha = 1.0;
  OpPtr U;
  IndexList row_idx;
  IndexList col_idx;

  Index rows() const { return static_cast<Index>(row_idx.size()); }
  Index cols() const { return static_cast<Index>(col_idx.size()); }
  Index dim() const { return U->dim(); }

  double normalization() const { return alpha; }
  /// alpha / ||A||.
  double subnormalization() const;

  /// alpha Pi_row U Pi_col^T x
  Vec apply(const Vec& x) const;
  /// alpha Pi_col U^T Pi_row^T y
  Vec apply_transpose(const Vec& y) const;
  /// Dense encoded matrix A.
  Mat encoded() const;
  /// Spectral norm of A.
  double encoded_norm() const;

  /// Embeds a vector of the column space into C^dim.
  Vec lift_column(const Vec& x) const;

  nlohmann::json manifest() const;
};

/// Dilation [[A, (I - A A^T)^{1/2}], [(I - A^T A)^{1/2}, -A^T]] of A = M / alpha.
/// Throws if alpha < ||M||.
BlockEncoding encode_dilation(const Mat& M, double alpha);

/// Encodes A B with alpha = alpha_A alpha_B.
BlockEncoding compose_product(const BlockEncoding& A, const BlockEncoding& B);

/// Encodes (B_1 | ... | B_k) with alpha = (sum alpha_i^2)^{1/2}.
BlockEncoding compose_concat_columns(const std::vector<BlockEncoding>& blocks);

/// Encodes A (x) B with alpha = alpha_A alpha_B.
BlockEncoding tensor(const BlockEncoding& A, const BlockEncoding& B);

/// Encodes A^T with the same alpha.
BlockEncoding transpose(const BlockEncoding& be);

/// Max |alpha Pi_row U Pi_col^T - target|.
double reconstruction_error(const BlockEncoding& be, const Mat& target);

/// Row-major little-endian float64 dump of U. Throws above kMaxDumpDim.
void dump_unitary(const std::string& path, const BlockEncoding& be);

} // namespace schwarzq

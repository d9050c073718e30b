#pragma once

#include "schwarzq/factor.hpp"
#include "schwarzq/layout.hpp"
#include "schwarzq/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace schwarzq {

enum class Flavor { as1, as2, hybrid };
enum class LocalSolver { exact, bpx };

const char* to_string(Flavor f);
const char* to_string(LocalSolver s);
Flavor flavor_from_string(const std::string& name);
LocalSolver local_solver_from_string(const std::string& name);

struct PreconditionerOptions {
  Flavor flavor = Flavor::as2;
  LocalSolver local = LocalSolver::exact;
  bool use_coarse = true;
  CoarseKind coarse = CoarseKind::partition_of_unity;
};

/**
 * Additive Schwarz preconditioner in split form H = F F^T with
 *   F = (R_1^T F_1 | ... | R_N^T F_N | Z F_0),
 * blocks in subdomain order and the coarse block last. The hybrid flavour
 * uses F = ((I - P0) R_1^T F_1 | ... | (I - P0) R_N^T F_N | Z F_0) with
 * P0 = Z (Z^T A Z)^{-1} Z^T A.
 */
class SplitPreconditioner {
public:
  SplitPreconditioner(const SpMat& A, const SubdomainLayout& layout,
                      const PreconditionerOptions& options);

  Flavor flavor() const { return flavor_; }
  LocalSolver local_solver() const { return local_; }
  bool has_coarse() const { return coarse_factor_ != nullptr; }
  CoarseKind coarse_kind() const { return coarse_kind_; }

  Index rows() const { return A_.rows(); }
  /// Columns of the split factor: sum_i cols(F_i) + cols(F_0).
  Index cols() const { return total_cols_; }
  int num_local_blocks() const { return static_cast<int>(local_factors_.size()); }
  Index block_offset(int block) const { return offsets_[static_cast<std::size_t>(block)]; }
  Index block_cols(int block) const;

  const SubdomainLayout& layout() const { return layout_; }
  const LocalFactor& local_factor(int i) const { return *local_factors_[static_cast<std::size_t>(i)]; }
  const SpMat& coarse_basis() const { return Z_; }
  /// Throws if there is no coarse block.
  const LocalFactor& coarse_factor() const;

  /// F y
  Vec apply_Ftilde(const Vec& y) const;
  /// F^T x
  Vec apply_Ftilde_T(const Vec& x) const;
  /// H x = F F^T x
  Vec apply(const Vec& x) const;

  /// Dense F, for small instances only.
  Mat dense_Ftilde() const;
  /// Dense H assembled from its definition, for small instances only.
  Mat dense_H() const;

private:
  Vec coarse_projection(const Vec& x) const;           // P0 x
  Vec coarse_projection_transpose(const Vec& x) const; // P0^T x

  SpMat A_;
  SubdomainLayout layout_;
  Flavor flavor_;
  LocalSolver local_;
  CoarseKind coarse_kind_;
  std::vector<SpMat> R_;
  std::vector<std::shared_ptr<const LocalFactor>> local_factors_;
  SpMat Z_;
  std::shared_ptr<const LocalFactor> coarse_factor_;
  std::vector<Index> offsets_;
  Index total_cols_ = 0;
};

SplitPreconditioner build_preconditioner(const SpMat& A, const SubdomainLayout& layout,
                                         const PreconditionerOptions& options);

/// F^T A F as a matrix-free operator on the split space.
Vec apply_split_operator(const SpMat& A, const SplitPreconditioner& P, const Vec& y);

} // namespace schwarzq

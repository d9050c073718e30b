#pragma once

#include "schwarzq/factor.hpp"
#include "schwarzq/types.hpp"

#include <utility>
#include <vector>

namespace schwarzq {

/**
 * Split BPX factor on the unit hypercube,
 *   F = (2^{-(2-d)/2} I_{1,L} | ... | 2^{-l(2-d)/2} I_{l,L} | ... | I_{L,L} scaled),
 * where I_{l,L} embeds the level-l Q1 space into the level-L space by nodal
 * interpolation. Every subdomain is a congruent unit hypercube, so one factor
 * is shared by all of them.
 */
class BpxFactor final : public LocalFactor {
public:
  struct Block {
    int level;
    double scale;
    SpMat embedding; // (2^L-1)^d x (2^l-1)^d
  };

  BpxFactor(int level, int dim);

  int level() const { return level_; }
  int dim() const { return dim_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  Index rows() const override { return rows_; }
  Index cols() const override { return cols_; }
  Vec apply(const Vec& y) const override;
  Vec apply_transpose(const Vec& x) const override;
  Mat dense() const override;

private:
  int level_;
  int dim_;
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Block> blocks_;
};

BpxFactor build_bpx(int level, int dim);

/// 1D nodal interpolation from level l to level l+1 (stencil 1/2, 1, 1/2).
SpMat interpolation_1d(int coarse_level);

/// I_{l,L} = I_{L-1,L} ... I_{l,l+1}, tensorised over d directions.
SpMat level_embedding(int from_level, int to_level, int dim);

struct BpxBounds {
  double mu_min;
  double mu_max;
};

/// Extreme nonzero eigenvalues of F^T A_i F (equivalently of H_i A_i).
BpxBounds bpx_spectral_bounds(const SpMat& local_stiffness, const LocalFactor& factor,
                              double tol = 1e-8);

} // namespace schwarzq

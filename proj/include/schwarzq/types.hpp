#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <vector>

namespace schwarzq {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using IndexList = std::vector<Index>;

/// Smallest power of two that is >= n (1 for n <= 1).
inline Index next_pow2(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline int ceil_log2(Index n) {
  int q = 0;
  while ((Index{1} << q) < n) ++q;
  return q;
}

inline bool is_pow2(Index n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace schwarzq

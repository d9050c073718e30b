#pragma once

#include "schwarzq/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace schwarzq {

/**
 * Cartesian geometry of the global domain and of its overlapping
 * decomposition into unit hypercubes.
 *
 * Subdomains have side 1 and are meshed with 2^L elements per direction.
 * Neighbouring subdomains share 2*delta*2^L element layers, so direction s
 * spans [0, N_s - 2 delta (N_s - 1)].
 */
struct MeshSpec {
  int dim = 1;
  int level = 1;
  std::vector<int> subdomains{1};
  double delta = 0.25;

  double h() const;
  /// Elements shared by two neighbouring subdomains (2 delta 2^L).
  int overlap_elements() const;
  /// Offset in elements between the origins of consecutive subdomains.
  int stride_elements() const;
  int elements_per_subdomain() const { return 1 << level; }

  int elements(int s) const;
  int dofs(int s) const;
  Index num_elements() const;
  Index num_dofs() const;
  int num_subdomains() const;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  std::string describe() const;
};

/// Mesh of a single unit hypercube with 2^L elements per direction.
MeshSpec unit_hypercube(int dim, int level);

/// Lexicographic element / dof numbering with direction 1 varying fastest.
struct GridIndexer {
  std::vector<Index> extent;

  Index size() const;
  Index flatten(const std::vector<Index>& multi) const;
  std::vector<Index> unflatten(Index flat) const;
};

GridIndexer element_indexer(const MeshSpec& mesh);
GridIndexer dof_indexer(const MeshSpec& mesh);

} // namespace schwarzq

#pragma once

#include "schwarzq/mesh.hpp"
#include "schwarzq/types.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace schwarzq {

/**
 * Overlapping decomposition of the global mesh into unit-hypercube
 * subdomains. Subdomains are numbered lexicographically in their multi-index
 * (i_1, ..., i_d) with i_1 varying fastest; all indices are 0-based.
 */
struct SubdomainLayout {
  MeshSpec mesh;
  /// Sorted global interior dofs of each subdomain.
  std::vector<IndexList> omega;
  /// Sorted global elements of each subdomain.
  std::vector<IndexList> elements;
  std::vector<std::vector<int>> multi_index;

  int count() const { return static_cast<int>(omega.size()); }
  Index local_dofs() const;
  Index local_elements() const;
  int flat_index(const std::vector<int>& multi) const;

  /// Whether subdomains a and b share at least one element.
  bool overlaps(int a, int b) const;
  /// Chromatic number of the overlap graph.
  int coloring_constant() const;

  nlohmann::json to_json() const;
};

SubdomainLayout build_layout(const MeshSpec& mesh);

/// R_i: 0/1 matrix of shape |omega_i| x N selecting omega_i.
SpMat restriction(const SubdomainLayout& layout, int i);

/// A(omega_i, omega_i).
SpMat local_stiffness(const SpMat& A, const SubdomainLayout& layout, int i);

/// Extension by zero of local DG coefficients (local element ordering) to the
/// global DG space, in the row ordering of factorize_gradient().
SpMat dg_prolongation(const SubdomainLayout& layout, int i);

/// Same as dg_prolongation() but with the local elements shifted by
/// `element_offset` along direction 1. Used to build negative controls.
SpMat dg_prolongation_shifted(const SubdomainLayout& layout, int i, int element_offset);

/// C_L R_i^T == P_i^T C^(i), compared entrywise.
bool local_gradient_identity_check(const MeshSpec& mesh, const SubdomainLayout& layout, int i);
bool local_gradient_identity_check(const SpMat& global_gradient, const SpMat& local_gradient,
                                   const SubdomainLayout& layout, const SpMat& prolongation, int i);

enum class CoarseKind { none, nodal, partition_of_unity };

/**
 * Coarse space basis Z (N x n_coarse).
 *
 * nodal: Q1 hats of the coarse mesh whose interior nodes sit at the centres of
 *   the overlaps between consecutive subdomains, interpolated on the fine mesh.
 * partition_of_unity: one column per subdomain, z_i = R_i^T D_i 1 with D_i the
 *   inverse dof multiplicity, so that sum_i z_i = 1 at every interior dof.
 */
SpMat coarse_space(const SubdomainLayout& layout, CoarseKind kind = CoarseKind::nodal);

const char* to_string(CoarseKind kind);
CoarseKind coarse_kind_from_string(const std::string& name);

} // namespace schwarzq

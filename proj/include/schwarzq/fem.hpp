#pragma once

#include "schwarzq/mesh.hpp"
#include "schwarzq/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace schwarzq {

/// Elementwise constant, symmetric positive definite diffusion tensor.
class Coefficient {
public:
  Coefficient() = default;

  /// rho = I on every element.
  static Coefficient identity(const MeshSpec& mesh);
  /// rho = value * I, one scalar per element.
  static Coefficient scalar(const MeshSpec& mesh, const std::vector<double>& values);
  /// General per-element d x d tensors. Throws if a tensor is not SPD.
  static Coefficient tensors(const MeshSpec& mesh, std::vector<Mat> blocks);

  int dim() const { return dim_; }
  Index num_elements() const { return static_cast<Index>(blocks_.size()); }
  const Mat& block(Index element) const { return blocks_[static_cast<std::size_t>(element)]; }

  double rho_min() const { return rho_min_; }
  double rho_max() const { return rho_max_; }
  double contrast() const { return rho_max_ / rho_min_; }

  void set_block(Index element, const Mat& rho);

private:
  void refresh_bounds();

  int dim_ = 0;
  std::vector<Mat> blocks_;
  double rho_min_ = 0.0;
  double rho_max_ = 0.0;
};

/// Right-hand side descriptor: a global constant or one constant per element.
struct Source {
  enum class Kind { constant, elementwise };
  Kind kind = Kind::constant;
  double value = 1.0;
  std::vector<double> per_element;

  static Source constant(double v) { return {Kind::constant, v, {}}; }
  static Source elementwise(std::vector<double> values) {
    return {Kind::elementwise, 0.0, std::move(values)};
  }
};

/// Q1 stiffness matrix on interior dofs, integrated in closed form.
SpMat assemble_stiffness(const MeshSpec& mesh, const Coefficient& rho);

/// Q1 mass matrix on interior dofs.
SpMat assemble_mass(const MeshSpec& mesh);

/**
 * Matrix of the elementwise gradient V_L -> Q_L^d in the L2-orthonormal
 * tensor-Legendre basis.
 *
 * Rows are ordered (element, component s, local mode k) with k = sum_t k_t 2^t,
 * k_t = 0 the constant and k_t = 1 the linear Legendre mode in direction t.
 * Together with coefficient_operator() this gives A = C^T (D_rho (x) I) C.
 */
SpMat factorize_gradient(const MeshSpec& mesh);

/// Block diagonal D_rho with one d x d block per element.
SpMat coefficient_block(const MeshSpec& mesh, const Coefficient& rho);

/// D_rho (x) I_{2^d}, in the row ordering of factorize_gradient().
SpMat coefficient_operator(const MeshSpec& mesh, const Coefficient& rho);

/// b_i = int f phi_i, exact for elementwise constant f.
Vec assemble_rhs(const MeshSpec& mesh, const Source& f);

/// Number of rows of factorize_gradient(): d 2^d #elements.
Index dg_dimension(const MeshSpec& mesh);

void write_matrix_market(std::ostream& os, const SpMat& m);
void write_matrix_market(const std::string& path, const SpMat& m);
/// One value per line, 17 significant digits.
void write_vector_csv(std::ostream& os, const Vec& v);
void write_vector_csv(const std::string& path, const Vec& v);

} // namespace schwarzq

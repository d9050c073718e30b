#include "schwarzq/fem.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace schwarzq {

namespace {

/// Iterates the 2^d local vertices of element `elem` and reports the global dof
/// index of each interior vertex (-1 for boundary vertices).
std::vector<Index> element_dofs(const MeshSpec& mesh, const std::vector<Index>& elem) {
  const int nloc = 1 << mesh.dim;
  std::vector<Index> dofs(static_cast<std::size_t>(nloc), -1);
  for (int a = 0; a < nloc; ++a) {
    Index flat = 0;
    Index stride = 1;
    bool interior = true;
    for (int t = 0; t < mesh.dim; ++t) {
      const Index node = elem[static_cast<std::size_t>(t)] + ((a >> t) & 1);
      if (node < 1 || node > mesh.dofs(t)) {
        interior = false;
        break;
      }
      flat += (node - 1) * stride;
      stride *= mesh.dofs(t);
    }
    if (interior) dofs[static_cast<std::size_t>(a)] = flat;
  }
  return dofs;
}

double mass1d(int a, int b, double h) { return h / 6.0 * (a == b ? 2.0 : 1.0); }
double stiff1d(int a, int b, double h) { return (a == b ? 1.0 : -1.0) / h; }
// int lambda_a' lambda_b over one element: independent of b.
double mixed1d(int a) { return a ? 0.5 : -0.5; }

Mat element_stiffness(int d, double h, const Mat& rho) {
  const int nloc = 1 << d;
  Mat K = Mat::Zero(nloc, nloc);
  for (int a = 0; a < nloc; ++a) {
    for (int b = 0; b < nloc; ++b) {
      double sum = 0.0;
      for (int s = 0; s < d; ++s) {
        for (int t = 0; t < d; ++t) {
          if (rho(s, t) == 0.0) continue;
          double prod = 1.0;
          for (int u = 0; u < d; ++u) {
            const int au = (a >> u) & 1;
            const int bu = (b >> u) & 1;
            if (s == t)
              prod *= (u == s) ? stiff1d(au, bu, h) : mass1d(au, bu, h);
            else if (u == s)
              prod *= mixed1d(au);
            else if (u == t)
              prod *= mixed1d(bu);
            else
              prod *= mass1d(au, bu, h);
          }
          sum += rho(s, t) * prod;
        }
      }
      K(a, b) = sum;
    }
  }
  return 0.5 * (K + K.transpose());
}

void check_mesh(const MeshSpec& mesh) {
  mesh.validate();
}

void check_coefficient(const MeshSpec& mesh, const Coefficient& rho) {
  if (rho.dim() != mesh.dim || rho.num_elements() != mesh.num_elements())
    throw std::invalid_argument("coefficient does not match the mesh");
}

} // namespace

// --- Coefficient -----------------------------------------------------------

Coefficient Coefficient::identity(const MeshSpec& mesh) {
  return scalar(mesh, std::vector<double>(static_cast<std::size_t>(mesh.num_elements()), 1.0));
}

Coefficient Coefficient::scalar(const MeshSpec& mesh, const std::vector<double>& values) {
  if (static_cast<Index>(values.size()) != mesh.num_elements())
    throw std::invalid_argument("one scalar coefficient per element expected");
  std::vector<Mat> blocks;
  blocks.reserve(values.size());
  for (double v : values) blocks.push_back(v * Mat::Identity(mesh.dim, mesh.dim));
  return tensors(mesh, std::move(blocks));
}

Coefficient Coefficient::tensors(const MeshSpec& mesh, std::vector<Mat> blocks) {
  if (static_cast<Index>(blocks.size()) != mesh.num_elements())
    throw std::invalid_argument("one coefficient tensor per element expected");
  Coefficient c;
  c.dim_ = mesh.dim;
  c.blocks_ = std::move(blocks);
  c.refresh_bounds();
  return c;
}

void Coefficient::set_block(Index element, const Mat& rho) {
  blocks_.at(static_cast<std::size_t>(element)) = rho;
  refresh_bounds();
}

void Coefficient::refresh_bounds() {
  rho_min_ = std::numeric_limits<double>::infinity();
  rho_max_ = 0.0;
  for (const Mat& b : blocks_) {
    if (b.rows() != dim_ || b.cols() != dim_)
      throw std::invalid_argument("coefficient block has wrong shape");
    if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-14 * std::max(1.0, b.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("coefficient block is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(b, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) throw std::invalid_argument("coefficient block is not positive definite");
    rho_min_ = std::min(rho_min_, lo);
    rho_max_ = std::max(rho_max_, hi);
  }
}

// --- Assembly --------------------------------------------------------------

Index dg_dimension(const MeshSpec& mesh) {
  return static_cast<Index>(mesh.dim) * (Index{1} << mesh.dim) * mesh.num_elements();
}

SpMat assemble_stiffness(const MeshSpec& mesh, const Coefficient& rho) {
  check_mesh(mesh);
  check_coefficient(mesh, rho);
  const GridIndexer elems = element_indexer(mesh);
  const Index n = mesh.num_dofs();
  const int nloc = 1 << mesh.dim;
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(elems.size() * nloc * nloc));
  for (Index e = 0; e < elems.size(); ++e) {
    const auto dofs = element_dofs(mesh, elems.unflatten(e));
    const Mat K = element_stiffness(mesh.dim, mesh.h(), rho.block(e));
    for (int a = 0; a < nloc; ++a) {
      if (dofs[a] < 0) continue;
      for (int b = 0; b < nloc; ++b)
        if (dofs[b] >= 0) trips.emplace_back(dofs[a], dofs[b], K(a, b));
    }
  }
  SpMat A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

SpMat assemble_mass(const MeshSpec& mesh) {
  check_mesh(mesh);
  const GridIndexer elems = element_indexer(mesh);
  const int nloc = 1 << mesh.dim;
  const double h = mesh.h();
  std::vector<Triplet> trips;
  for (Index e = 0; e < elems.size(); ++e) {
    const auto dofs = element_dofs(mesh, elems.unflatten(e));
    for (int a = 0; a < nloc; ++a) {
      if (dofs[a] < 0) continue;
      for (int b = 0; b < nloc; ++b) {
        if (dofs[b] < 0) continue;
        double m = 1.0;
        for (int t = 0; t < mesh.dim; ++t) m *= mass1d((a >> t) & 1, (b >> t) & 1, h);
        trips.emplace_back(dofs[a], dofs[b], m);
      }
    }
  }
  SpMat M(mesh.num_dofs(), mesh.num_dofs());
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  return M;
}

SpMat factorize_gradient(const MeshSpec& mesh) {
  check_mesh(mesh);
  const GridIndexer elems = element_indexer(mesh);
  const int d = mesh.dim;
  const int nloc = 1 << d;
  const double h = mesh.h();
  const double sqrt_h = std::sqrt(h);
  const double linear_mode = std::sqrt(3.0) * sqrt_h / 6.0;

  std::vector<Triplet> trips;
  for (Index e = 0; e < elems.size(); ++e) {
    const auto dofs = element_dofs(mesh, elems.unflatten(e));
    for (int s = 0; s < d; ++s) {
      for (int k = 0; k < nloc; ++k) {
        if ((k >> s) & 1) continue; // d/dx_s of a Q1 function is constant in x_s
        const Index row = (e * d + s) * nloc + k;
        for (int a = 0; a < nloc; ++a) {
          if (dofs[a] < 0) continue;
          double value = 1.0;
          for (int t = 0; t < d; ++t) {
            const double sign = ((a >> t) & 1) ? 1.0 : -1.0;
            if (t == s)
              value *= sign / sqrt_h;
            else if ((k >> t) & 1)
              value *= sign * linear_mode;
            else
              value *= 0.5 * sqrt_h;
          }
          trips.emplace_back(row, dofs[a], value);
        }
      }
    }
  }
  SpMat C(dg_dimension(mesh), mesh.num_dofs());
  C.setFromTriplets(trips.begin(), trips.end());
  C.makeCompressed();
  return C;
}

SpMat coefficient_block(const MeshSpec& mesh, const Coefficient& rho) {
  check_mesh(mesh);
  check_coefficient(mesh, rho);
  const int d = mesh.dim;
  std::vector<Triplet> trips;
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    const Mat& b = rho.block(e);
    for (int s = 0; s < d; ++s)
      for (int t = 0; t < d; ++t)
        if (b(s, t) != 0.0) trips.emplace_back(e * d + s, e * d + t, b(s, t));
  }
  SpMat D(d * mesh.num_elements(), d * mesh.num_elements());
  D.setFromTriplets(trips.begin(), trips.end());
  D.makeCompressed();
  return D;
}

SpMat coefficient_operator(const MeshSpec& mesh, const Coefficient& rho) {
  const SpMat D = coefficient_block(mesh, rho);
  const Index nloc = Index{1} << mesh.dim;
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(D.nonZeros() * nloc));
  for (Index col = 0; col < D.outerSize(); ++col)
    for (SpMat::InnerIterator it(D, col); it; ++it)
      for (Index k = 0; k < nloc; ++k)
        trips.emplace_back(it.row() * nloc + k, it.col() * nloc + k, it.value());
  SpMat out(D.rows() * nloc, D.cols() * nloc);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

Vec assemble_rhs(const MeshSpec& mesh, const Source& f) {
  check_mesh(mesh);
  const GridIndexer elems = element_indexer(mesh);
  if (f.kind == Source::Kind::elementwise &&
      static_cast<Index>(f.per_element.size()) != elems.size())
    throw std::invalid_argument("unsupported source: per-element values do not match the mesh");
  const int nloc = 1 << mesh.dim;
  // int_K phi_a = |K| / 2^d for every Q1 vertex function.
  const double vertex_weight = std::pow(mesh.h() / 2.0, mesh.dim);
  Vec b = Vec::Zero(mesh.num_dofs());
  for (Index e = 0; e < elems.size(); ++e) {
    const double fe = f.kind == Source::Kind::constant ? f.value
                                                      : f.per_element[static_cast<std::size_t>(e)];
    if (fe == 0.0) continue;
    const auto dofs = element_dofs(mesh, elems.unflatten(e));
    for (int a = 0; a < nloc; ++a)
      if (dofs[a] >= 0) b[dofs[a]] += fe * vertex_weight;
  }
  return b;
}

// --- Export ----------------------------------------------------------------

void write_matrix_market(std::ostream& os, const SpMat& m) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  os << std::setprecision(17);
  for (Index col = 0; col < m.outerSize(); ++col)
    for (SpMat::InnerIterator it(m, col); it; ++it)
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

void write_matrix_market(const std::string& path, const SpMat& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_matrix_market(os, m);
}

void write_vector_csv(std::ostream& os, const Vec& v) {
  os << std::setprecision(17);
  for (Index i = 0; i < v.size(); ++i) os << v[i] << '\n';
}

void write_vector_csv(const std::string& path, const Vec& v) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_vector_csv(os, v);
}

} // namespace schwarzq

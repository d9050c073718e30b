#include "schwarzq/layout.hpp"

#include "schwarzq/fem.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace schwarzq {

namespace {

void check_index(const SubdomainLayout& layout, int i) {
  if (i < 0 || i >= layout.count())
    throw std::out_of_range("subdomain index " + std::to_string(i) + " out of range");
}

SpMat selection_matrix(const IndexList& rows_to_cols, Index cols) {
  std::vector<Triplet> trips;
  trips.reserve(rows_to_cols.size());
  for (std::size_t r = 0; r < rows_to_cols.size(); ++r)
    trips.emplace_back(static_cast<Index>(r), rows_to_cols[r], 1.0);
  SpMat R(static_cast<Index>(rows_to_cols.size()), cols);
  R.setFromTriplets(trips.begin(), trips.end());
  R.makeCompressed();
  return R;
}

/// Piecewise linear hat with nodes left < peak < right, evaluated at x.
double hat(double x, double left, double peak, double right) {
  if (x <= left || x >= right) return 0.0;
  return x <= peak ? (x - left) / (peak - left) : (right - x) / (right - peak);
}

} // namespace

Index SubdomainLayout::local_dofs() const {
  Index n = 1;
  for (int s = 0; s < mesh.dim; ++s) n *= mesh.elements_per_subdomain() - 1;
  return n;
}

Index SubdomainLayout::local_elements() const {
  Index n = 1;
  for (int s = 0; s < mesh.dim; ++s) n *= mesh.elements_per_subdomain();
  return n;
}

int SubdomainLayout::flat_index(const std::vector<int>& multi) const {
  int flat = 0;
  int stride = 1;
  for (int s = 0; s < mesh.dim; ++s) {
    flat += multi[static_cast<std::size_t>(s)] * stride;
    stride *= mesh.subdomains[static_cast<std::size_t>(s)];
  }
  return flat;
}

bool SubdomainLayout::overlaps(int a, int b) const {
  if (a == b) return true;
  const auto& ma = multi_index[static_cast<std::size_t>(a)];
  const auto& mb = multi_index[static_cast<std::size_t>(b)];
  for (int s = 0; s < mesh.dim; ++s) {
    const int lo = std::min(ma[s], mb[s]);
    const int hi = std::max(ma[s], mb[s]);
    // Slabs [i*stride, i*stride + 2^L) intersect in at least one element.
    if ((hi - lo) * mesh.stride_elements() >= mesh.elements_per_subdomain()) return false;
  }
  return true;
}

int SubdomainLayout::coloring_constant() const {
  const int n = count();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b && overlaps(a, b)) adj[a].push_back(b);

  std::vector<int> color(static_cast<std::size_t>(n), -1);
  std::function<bool(int, int)> assign = [&](int v, int k) -> bool {
    if (v == n) return true;
    for (int c = 0; c < k; ++c) {
      bool ok = true;
      for (int w : adj[v])
        if (color[w] == c) {
          ok = false;
          break;
        }
      if (!ok) continue;
      color[v] = c;
      if (assign(v + 1, k)) return true;
      color[v] = -1;
    }
    return false;
  };
  for (int k = 1; k <= n; ++k) {
    std::fill(color.begin(), color.end(), -1);
    if (assign(0, k)) return k;
  }
  return n;
}

nlohmann::json SubdomainLayout::to_json() const {
  nlohmann::json j;
  j["d"] = mesh.dim;
  j["L"] = mesh.level;
  j["N_s"] = mesh.subdomains;
  j["delta"] = mesh.delta;
  j["omega"] = omega;
  return j;
}

SubdomainLayout build_layout(const MeshSpec& mesh) {
  mesh.validate();
  SubdomainLayout layout;
  layout.mesh = mesh;
  const int d = mesh.dim;
  const int n_sub = mesh.num_subdomains();
  const int width = mesh.elements_per_subdomain();
  const int stride = mesh.stride_elements();
  const GridIndexer elems = element_indexer(mesh);
  const GridIndexer dofs = dof_indexer(mesh);

  for (int flat = 0; flat < n_sub; ++flat) {
    std::vector<int> multi(static_cast<std::size_t>(d));
    int rest = flat;
    for (int s = 0; s < d; ++s) {
      multi[s] = rest % mesh.subdomains[s];
      rest /= mesh.subdomains[s];
    }

    IndexList el;
    {
      GridIndexer local;
      local.extent.assign(static_cast<std::size_t>(d), width);
      for (Index e = 0; e < local.size(); ++e) {
        auto m = local.unflatten(e);
        for (int s = 0; s < d; ++s) m[s] += Index{multi[s]} * stride;
        el.push_back(elems.flatten(m));
      }
    }
    IndexList om;
    {
      GridIndexer local;
      local.extent.assign(static_cast<std::size_t>(d), width - 1);
      for (Index v = 0; v < local.size(); ++v) {
        auto m = local.unflatten(v);
        for (int s = 0; s < d; ++s) m[s] += Index{multi[s]} * stride;
        om.push_back(dofs.flatten(m));
      }
    }
    // Lexicographic local numbering with direction 1 fastest is already sorted.
    layout.elements.push_back(std::move(el));
    layout.omega.push_back(std::move(om));
    layout.multi_index.push_back(std::move(multi));
  }
  return layout;
}

SpMat restriction(const SubdomainLayout& layout, int i) {
  check_index(layout, i);
  return selection_matrix(layout.omega[static_cast<std::size_t>(i)], layout.mesh.num_dofs());
}

SpMat local_stiffness(const SpMat& A, const SubdomainLayout& layout, int i) {
  check_index(layout, i);
  const SpMat R = restriction(layout, i);
  SpMat Ai = R * A * SpMat(R.transpose());
  Ai.makeCompressed();
  return Ai;
}

SpMat dg_prolongation_shifted(const SubdomainLayout& layout, int i, int element_offset) {
  check_index(layout, i);
  const MeshSpec& mesh = layout.mesh;
  const int d = mesh.dim;
  const Index nloc = Index{1} << d;
  const GridIndexer global = element_indexer(mesh);
  GridIndexer local;
  local.extent.assign(static_cast<std::size_t>(d), mesh.elements_per_subdomain());
  const auto& multi = layout.multi_index[static_cast<std::size_t>(i)];

  std::vector<Triplet> trips;
  for (Index e = 0; e < local.size(); ++e) {
    auto m = local.unflatten(e);
    for (int s = 0; s < d; ++s) m[s] += Index{multi[s]} * mesh.stride_elements();
    m[0] += element_offset;
    if (m[0] < 0 || m[0] >= global.extent[0]) continue;
    const Index eg = global.flatten(m);
    for (int s = 0; s < d; ++s)
      for (Index k = 0; k < nloc; ++k)
        trips.emplace_back((eg * d + s) * nloc + k, (e * d + s) * nloc + k, 1.0);
  }
  SpMat P(dg_dimension(mesh), static_cast<Index>(d) * nloc * local.size());
  P.setFromTriplets(trips.begin(), trips.end());
  P.makeCompressed();
  return P;
}

SpMat dg_prolongation(const SubdomainLayout& layout, int i) {
  return dg_prolongation_shifted(layout, i, 0);
}

bool local_gradient_identity_check(const SpMat& global_gradient, const SpMat& local_gradient,
                                   const SubdomainLayout& layout, const SpMat& prolongation,
                                   int i) {
  const SpMat R = restriction(layout, i);
  const SpMat lhs = global_gradient * SpMat(R.transpose());
  const SpMat rhs = prolongation * local_gradient;
  if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols()) return false;
  const SpMat diff = lhs - rhs;
  for (Index col = 0; col < diff.outerSize(); ++col)
    for (SpMat::InnerIterator it(diff, col); it; ++it)
      if (it.value() != 0.0) return false;
  return true;
}

bool local_gradient_identity_check(const MeshSpec& mesh, const SubdomainLayout& layout, int i) {
  check_index(layout, i);
  const SpMat C = factorize_gradient(mesh);
  const SpMat Ci = factorize_gradient(unit_hypercube(mesh.dim, mesh.level));
  return local_gradient_identity_check(C, Ci, layout, dg_prolongation(layout, i), i);
}

SpMat coarse_space(const SubdomainLayout& layout, CoarseKind kind) {
  const MeshSpec& mesh = layout.mesh;
  const Index n = mesh.num_dofs();
  if (kind == CoarseKind::none || layout.count() < 2) return SpMat(n, 0);

  if (kind == CoarseKind::partition_of_unity) {
    Vec multiplicity = Vec::Zero(n);
    for (const auto& om : layout.omega)
      for (Index v : om) multiplicity[v] += 1.0;
    std::vector<Triplet> trips;
    for (int i = 0; i < layout.count(); ++i)
      for (Index v : layout.omega[static_cast<std::size_t>(i)])
        trips.emplace_back(v, i, 1.0 / multiplicity[v]);
    SpMat Z(n, layout.count());
    Z.setFromTriplets(trips.begin(), trips.end());
    Z.makeCompressed();
    return Z;
  }

  // Nodal Q1 coarse space: tensor product of 1D coarse hats.
  const int d = mesh.dim;
  const double h = mesh.h();
  std::vector<Mat> factors;
  for (int s = 0; s < d; ++s) {
    const int ns = mesh.subdomains[static_cast<std::size_t>(s)];
    const int m = mesh.dofs(s);
    std::vector<double> nodes{0.0};
    for (int k = 1; k < ns; ++k)
      nodes.push_back((k * mesh.stride_elements() + 0.5 * mesh.overlap_elements()) * h);
    nodes.push_back((m + 1) * h);
    Mat Z1 = Mat::Zero(m, std::max(ns - 1, 0));
    for (int k = 1; k < ns; ++k)
      for (int v = 0; v < m; ++v)
        Z1(v, k - 1) = hat((v + 1) * h, nodes[k - 1], nodes[k], nodes[k + 1]);
    factors.push_back(std::move(Z1));
  }
  // Directions with a single subdomain have no interior coarse node.
  for (const Mat& f : factors)
    if (f.cols() == 0) return SpMat(n, 0);

  Mat Z = factors[0];
  for (int s = 1; s < d; ++s) {
    const Mat& f = factors[static_cast<std::size_t>(s)];
    Mat next(Z.rows() * f.rows(), Z.cols() * f.cols());
    // Direction s is slower than the previous ones: kron(f, Z).
    for (Index a = 0; a < f.rows(); ++a)
      for (Index b = 0; b < f.cols(); ++b)
        next.block(a * Z.rows(), b * Z.cols(), Z.rows(), Z.cols()) = f(a, b) * Z;
    Z = std::move(next);
  }
  return Z.sparseView();
}

const char* to_string(CoarseKind kind) {
  switch (kind) {
  case CoarseKind::none: return "none";
  case CoarseKind::nodal: return "nodal";
  case CoarseKind::partition_of_unity: return "pou";
  }
  return "?";
}

CoarseKind coarse_kind_from_string(const std::string& name) {
  if (name == "none") return CoarseKind::none;
  if (name == "nodal") return CoarseKind::nodal;
  if (name == "pou" || name == "partition_of_unity") return CoarseKind::partition_of_unity;
  throw std::invalid_argument("unknown coarse space '" + name + "'");
}

} // namespace schwarzq

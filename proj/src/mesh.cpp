#include "schwarzq/mesh.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace schwarzq {

namespace {

int checked_integer(double value, const char* what) {
  const double r = std::round(value);
  if (std::abs(value - r) > 1e-9 * std::max(1.0, std::abs(value)))
    throw std::invalid_argument(std::string(what) + " is not an integer: " + std::to_string(value));
  return static_cast<int>(r);
}

} // namespace

double MeshSpec::h() const { return std::ldexp(1.0, -level); }

int MeshSpec::overlap_elements() const {
  return checked_integer(2.0 * delta * std::ldexp(1.0, level), "2*delta*2^L");
}

int MeshSpec::stride_elements() const { return elements_per_subdomain() - overlap_elements(); }

int MeshSpec::elements(int s) const {
  const int n = subdomains.at(static_cast<std::size_t>(s));
  return elements_per_subdomain() + stride_elements() * (n - 1);
}

int MeshSpec::dofs(int s) const { return elements(s) - 1; }

Index MeshSpec::num_elements() const {
  Index n = 1;
  for (int s = 0; s < dim; ++s) n *= elements(s);
  return n;
}

Index MeshSpec::num_dofs() const {
  Index n = 1;
  for (int s = 0; s < dim; ++s) n *= dofs(s);
  return n;
}

int MeshSpec::num_subdomains() const {
  int n = 1;
  for (int s = 0; s < dim; ++s) n *= subdomains[static_cast<std::size_t>(s)];
  return n;
}

void MeshSpec::validate() const {
  if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  if (level < 1 || level > 12) throw std::invalid_argument("level must be in [1, 12]");
  if (static_cast<int>(subdomains.size()) != dim)
    throw std::invalid_argument("expected one subdomain count per direction");
  for (int n : subdomains)
    if (n < 1) throw std::invalid_argument("subdomain counts must be >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("overlap delta must be positive");
  const int overlap = overlap_elements();
  if (overlap < 1) throw std::invalid_argument("2*delta*2^L must be a positive integer");
  if (1.0 - 2.0 * delta <= 0.0 || stride_elements() <= 0)
    throw std::invalid_argument("overlap too large: neighbouring subdomains coincide");
  for (int s = 0; s < dim; ++s)
    if (dofs(s) <= 0) throw std::invalid_argument("direction without interior dofs");
}

std::string MeshSpec::describe() const {
  std::ostringstream os;
  os << "d=" << dim << " L=" << level << " N=(";
  for (std::size_t s = 0; s < subdomains.size(); ++s) os << (s ? "," : "") << subdomains[s];
  os << ") delta=" << delta;
  return os.str();
}

MeshSpec unit_hypercube(int dim, int level) {
  MeshSpec m;
  m.dim = dim;
  m.level = level;
  m.subdomains.assign(static_cast<std::size_t>(dim), 1);
  // Irrelevant for a single subdomain; any admissible value keeps validate() happy.
  m.delta = std::ldexp(1.0, -level - 1);
  return m;
}

Index GridIndexer::size() const {
  Index n = 1;
  for (Index e : extent) n *= e;
  return n;
}

Index GridIndexer::flatten(const std::vector<Index>& multi) const {
  Index flat = 0;
  Index stride = 1;
  for (std::size_t s = 0; s < extent.size(); ++s) {
    flat += multi[s] * stride;
    stride *= extent[s];
  }
  return flat;
}

std::vector<Index> GridIndexer::unflatten(Index flat) const {
  std::vector<Index> multi(extent.size());
  for (std::size_t s = 0; s < extent.size(); ++s) {
    multi[s] = flat % extent[s];
    flat /= extent[s];
  }
  return multi;
}

GridIndexer element_indexer(const MeshSpec& mesh) {
  GridIndexer g;
  for (int s = 0; s < mesh.dim; ++s) g.extent.push_back(mesh.elements(s));
  return g;
}

GridIndexer dof_indexer(const MeshSpec& mesh) {
  GridIndexer g;
  for (int s = 0; s < mesh.dim; ++s) g.extent.push_back(mesh.dofs(s));
  return g;
}

} // namespace schwarzq

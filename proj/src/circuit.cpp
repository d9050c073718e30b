#include "schwarzq/circuit.hpp"

#include "schwarzq/fem.hpp"
#include "schwarzq/preconditioner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace schwarzq {

namespace {

Index bits(Index value, int offset, int count) {
  return (value >> offset) & ((Index{1} << count) - 1);
}

void check_multi(const RegisterLayout& layout, const std::vector<int>& multi) {
  if (static_cast<int>(multi.size()) != layout.dim())
    throw std::invalid_argument("subdomain multi-index has the wrong length");
  for (int t = 0; t < layout.dim(); ++t)
    if (multi[t] < 0 || multi[t] >= layout.mesh.subdomains[static_cast<std::size_t>(t)])
      throw std::out_of_range("subdomain multi-index out of range");
}

} // namespace

RegisterLayout make_register_layout(const MeshSpec& mesh) {
  mesh.validate();
  const double shift = std::ldexp(mesh.delta, mesh.level + 2);
  if (std::abs(shift - std::round(shift)) > 1e-12)
    throw std::invalid_argument("adder shift 2^(L+2) delta is not an integer");
  RegisterLayout r;
  r.mesh = mesh;
  int offset = 0;
  for (int t = 0; t < mesh.dim; ++t) {
    r.n.push_back(ceil_log2(mesh.subdomains[static_cast<std::size_t>(t)]));
    r.group_offset.push_back(offset);
    offset += r.group_qubits(t);
  }
  r.s_offset = offset;
  r.s_qubits = ceil_log2(mesh.dim);
  r.total_qubits = offset + r.s_qubits;
  if (r.total_qubits > 40) throw std::length_error("register layout too large");
  return r;
}

Index RegisterLayout::encode(const Tuple& tp) const {
  const int L = level();
  Index out = 0;
  for (int t = 0; t < dim(); ++t) {
    const int nt = n[static_cast<std::size_t>(t)];
    const std::size_t u = static_cast<std::size_t>(t);
    if (tp.k[u] < 0 || tp.k[u] > 1 || tp.j[u] < 0 || tp.j[u] >= (Index{1} << L) || tp.i[u] < 0 ||
        tp.i[u] >= (Index{1} << nt) || tp.itilde[u] < 0 || tp.itilde[u] >= (Index{1} << nt))
      throw std::out_of_range("register value out of range");
    const Index g = tp.k[u] + (tp.j[u] << 1) + (tp.i[u] << (L + 1)) + (tp.itilde[u] << (L + 1 + nt));
    out += g << group_offset[u];
  }
  if (tp.s < 0 || tp.s >= (Index{1} << s_qubits)) throw std::out_of_range("s register out of range");
  return out + (tp.s << s_offset);
}

RegisterLayout::Tuple RegisterLayout::decode(Index basis) const {
  if (basis < 0 || basis >= size()) throw std::out_of_range("basis index out of range");
  const int L = level();
  Tuple tp;
  for (int t = 0; t < dim(); ++t) {
    const int nt = n[static_cast<std::size_t>(t)];
    const Index g = group_value(basis, t);
    tp.k.push_back(bits(g, 0, 1));
    tp.j.push_back(bits(g, 1, L));
    tp.i.push_back(bits(g, L + 1, nt));
    tp.itilde.push_back(bits(g, L + 1 + nt, nt));
  }
  tp.s = bits(basis, s_offset, s_qubits);
  return tp;
}

Index RegisterLayout::group_value(Index basis, int t) const {
  return bits(basis, group_offset[static_cast<std::size_t>(t)], group_qubits(t));
}

nlohmann::json RegisterLayout::to_json() const {
  nlohmann::json groups = nlohmann::json::array();
  for (int t = 0; t < dim(); ++t)
    groups.push_back({{"direction", t + 1},
                      {"offset", group_offset[static_cast<std::size_t>(t)]},
                      {"k", 1},
                      {"j", level()},
                      {"i", n[static_cast<std::size_t>(t)]},
                      {"itilde", n[static_cast<std::size_t>(t)]}});
  return {{"total_qubits", total_qubits},
          {"groups", groups},
          {"s", {{"offset", s_offset}, {"qubits", s_qubits}}},
          {"endianness", "little"}};
}

Prolongation1D prolongation_permutation_1d(const RegisterLayout& layout, int direction) {
  if (direction < 0 || direction >= layout.dim()) throw std::out_of_range("direction out of range");
  const MeshSpec& mesh = layout.mesh;
  Prolongation1D p;
  p.L = mesh.level;
  p.n = layout.n[static_cast<std::size_t>(direction)];
  p.subdomains = mesh.subdomains[static_cast<std::size_t>(direction)];
  p.shift = static_cast<Index>(std::llround(std::ldexp(mesh.delta, mesh.level + 2)));
  p.modulus = Index{1} << (1 + p.L + p.n);
  p.dg_count = Index{p.subdomains} * (Index{1} << (p.L + 1)) - p.shift * (p.subdomains - 1);
  const Index N = Index{1} << p.n;
  p.perm.resize(static_cast<std::size_t>(p.modulus * N));
  for (Index it = 0; it < N; ++it)
    for (Index a = 0; a < p.modulus; ++a) {
      Index q = (a - p.shift * it) % p.modulus;
      if (q < 0) q += p.modulus;
      p.perm[static_cast<std::size_t>(a + p.modulus * it)] = q + p.modulus * it;
    }
  return p;
}

bool Prolongation1D::row_selected(Index x, int sub) const {
  const Index it = x / modulus, q = x % modulus;
  return it == sub && q < dg_count;
}

bool Prolongation1D::col_selected(Index x, int sub) const {
  const Index it = x / modulus;
  const Index i = (x % modulus) >> (L + 1);
  return it == sub && i == sub;
}

IndexList Prolongation1D::selected_rows(int sub) const {
  IndexList out;
  for (Index x = 0; x < dim(); ++x)
    if (row_selected(x, sub)) out.push_back(x);
  return out;
}

IndexList Prolongation1D::selected_cols(int sub) const {
  IndexList out;
  for (Index x = 0; x < dim(); ++x)
    if (col_selected(x, sub)) out.push_back(x);
  return out;
}

bool Prolongation1D::comparator_roundtrip(Index x, int sub) const {
  // Compute: subtract the bound, read the borrow into the flag, add it back.
  const Index q = x % modulus;
  const Index wide = Index{1} << (1 + L + n + 1);
  const Index diff = ((q - dg_count) % wide + wide) % wide;
  const bool borrow = diff >= wide / 2;
  const bool flag = borrow && (x / modulus == sub);
  const Index restored = (diff + dg_count) % wide;
  return restored == q && flag == row_selected(x, sub);
}

IndexList dg_row_basis(const RegisterLayout& layout, const std::vector<int>& multi) {
  check_multi(layout, multi);
  const MeshSpec& mesh = layout.mesh;
  const int d = mesh.dim;
  const GridIndexer elems = element_indexer(mesh);
  const Index nloc = Index{1} << d;
  IndexList out(static_cast<std::size_t>(dg_dimension(mesh)));
  for (Index e = 0; e < elems.size(); ++e) {
    const auto m = elems.unflatten(e);
    for (int s = 0; s < d; ++s)
      for (Index k = 0; k < nloc; ++k) {
        Index basis = 0;
        for (int t = 0; t < d; ++t) {
          // Row layout after the adder: q = k + 2 e occupies the (k, j, i) bits.
          const Index q = ((k >> t) & 1) + 2 * m[static_cast<std::size_t>(t)];
          const Index modulus = Index{1} << (1 + mesh.level + layout.n[static_cast<std::size_t>(t)]);
          basis += (q + modulus * multi[static_cast<std::size_t>(t)])
                   << layout.group_offset[static_cast<std::size_t>(t)];
        }
        basis += Index{s} << layout.s_offset;
        out[static_cast<std::size_t>((e * d + s) * nloc + k)] = basis;
      }
  }
  return out;
}

IndexList dg_col_basis(const RegisterLayout& layout, const std::vector<int>& multi) {
  check_multi(layout, multi);
  const MeshSpec& mesh = layout.mesh;
  const int d = mesh.dim;
  GridIndexer local;
  local.extent.assign(static_cast<std::size_t>(d), mesh.elements_per_subdomain());
  const Index nloc = Index{1} << d;
  IndexList out(static_cast<std::size_t>(d * nloc * local.size()));
  RegisterLayout::Tuple tp;
  tp.k.resize(d);
  tp.j.resize(d);
  tp.i.resize(d);
  tp.itilde.resize(d);
  for (int t = 0; t < d; ++t) tp.i[t] = tp.itilde[t] = multi[static_cast<std::size_t>(t)];
  for (Index e = 0; e < local.size(); ++e) {
    const auto m = local.unflatten(e);
    for (int s = 0; s < d; ++s)
      for (Index k = 0; k < nloc; ++k) {
        for (int t = 0; t < d; ++t) {
          tp.k[t] = (k >> t) & 1;
          tp.j[t] = m[static_cast<std::size_t>(t)];
        }
        tp.s = s;
        out[static_cast<std::size_t>((e * d + s) * nloc + k)] = layout.encode(tp);
      }
  }
  return out;
}

namespace {

IndexList predicate_scan(const RegisterLayout& layout, const std::vector<int>& multi, bool rows) {
  check_multi(layout, multi);
  std::vector<Prolongation1D> circuits;
  for (int t = 0; t < layout.dim(); ++t) circuits.push_back(prolongation_permutation_1d(layout, t));
  IndexList out;
  for (Index x = 0; x < layout.size(); ++x) {
    if (bits(x, layout.s_offset, layout.s_qubits) >= layout.dim()) continue;
    bool ok = true;
    for (int t = 0; t < layout.dim() && ok; ++t) {
      const Index g = layout.group_value(x, t);
      const int sub = multi[static_cast<std::size_t>(t)];
      ok = rows ? circuits[t].row_selected(g, sub) : circuits[t].col_selected(g, sub);
    }
    if (ok) out.push_back(x);
  }
  return out;
}

} // namespace

IndexList predicate_rows(const RegisterLayout& layout, const std::vector<int>& multi) {
  return predicate_scan(layout, multi, true);
}

IndexList predicate_cols(const RegisterLayout& layout, const std::vector<int>& multi) {
  return predicate_scan(layout, multi, false);
}

BlockEncoding prolongation_tensor(const RegisterLayout& layout, const std::vector<int>& multi) {
  check_multi(layout, multi);
  OpPtr U;
  for (int t = 0; t < layout.dim(); ++t) {
    OpPtr P = make_permutation(prolongation_permutation_1d(layout, t).perm);
    U = U ? make_kron(P, U) : P;
  }
  if (layout.s_qubits > 0) U = make_kron(make_identity(Index{1} << layout.s_qubits), U);
  BlockEncoding be;
  be.alpha = 1.0;
  be.U = U;
  be.row_idx = dg_row_basis(layout, multi);
  be.col_idx = dg_col_basis(layout, multi);
  return be;
}

BlockEncoding encode_prolongation(const SubdomainLayout& layout, int i) {
  if (i < 0 || i >= layout.count()) throw std::out_of_range("subdomain index out of range");
  return prolongation_tensor(make_register_layout(layout.mesh),
                             layout.multi_index[static_cast<std::size_t>(i)]);
}

RhsState prepare_rhs_state(const SplitPreconditioner& P, const Vec& b) {
  if (b.size() != P.rows()) throw std::invalid_argument("right-hand side has the wrong length");
  const Vec ft = P.apply_Ftilde_T(b);
  const double total = ft.norm();
  if (!(total > 0.0)) throw std::invalid_argument("F^T b vanishes: no state to prepare");

  const int nloc = P.num_local_blocks();
  const int nblocks = nloc + (P.has_coarse() ? 1 : 0);
  Index widest = 1;
  for (int blk = 0; blk < nblocks; ++blk) widest = std::max(widest, P.block_cols(blk));

  RhsState st;
  st.selector_qubits = ceil_log2(nloc + 1);
  st.block_qubits = ceil_log2(widest);
  st.total_norm = total;
  st.amplitudes = Vec::Zero(Index{1} << (st.selector_qubits + st.block_qubits));
  st.norms.assign(static_cast<std::size_t>(nloc + 1), 0.0);
  st.selector_amplitudes = Index{1} << st.selector_qubits;

  auto place = [&](int blk, Index selector) {
    const Vec piece = ft.segment(P.block_offset(blk), P.block_cols(blk));
    st.norms[static_cast<std::size_t>(selector)] = piece.norm();
    // Selector weight ||piece|| / ||F^T b|| times the normalised block state.
    st.amplitudes.segment(st.index(selector, 0), piece.size()) = piece / total;
  };
  for (int i = 0; i < nloc; ++i) place(i, i + 1);
  if (P.has_coarse()) place(nloc, 0);
  return st;
}

Vec flatten_rhs_state(const SplitPreconditioner& P, const RhsState& state) {
  Vec out(P.cols());
  const int nloc = P.num_local_blocks();
  for (int i = 0; i < nloc; ++i)
    out.segment(P.block_offset(i), P.block_cols(i)) =
        state.amplitudes.segment(state.index(i + 1, 0), P.block_cols(i));
  if (P.has_coarse())
    out.segment(P.block_offset(nloc), P.block_cols(nloc)) =
        state.amplitudes.segment(state.index(0, 0), P.block_cols(nloc));
  return out;
}

} // namespace schwarzq

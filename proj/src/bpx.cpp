#include "schwarzq/bpx.hpp"

#include "schwarzq/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace schwarzq {

SpMat interpolation_1d(int coarse_level) {
  const Index nc = (Index{1} << coarse_level) - 1;
  const Index nf = (Index{1} << (coarse_level + 1)) - 1;
  std::vector<Triplet> trips;
  for (Index j = 0; j < nc; ++j) {
    // Coarse node j+1 sits on fine node 2(j+1); fine indices are node - 1.
    const Index centre = 2 * (j + 1) - 1;
    trips.emplace_back(centre - 1, j, 0.5);
    trips.emplace_back(centre, j, 1.0);
    trips.emplace_back(centre + 1, j, 0.5);
  }
  SpMat P(nf, nc);
  P.setFromTriplets(trips.begin(), trips.end());
  P.makeCompressed();
  return P;
}

namespace {

SpMat kron(const SpMat& a, const SpMat& b) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
  for (Index ca = 0; ca < a.outerSize(); ++ca)
    for (SpMat::InnerIterator ia(a, ca); ia; ++ia)
      for (Index cb = 0; cb < b.outerSize(); ++cb)
        for (SpMat::InnerIterator ib(b, cb); ib; ++ib)
          trips.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                             ia.value() * ib.value());
  SpMat out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

SpMat identity(Index n) {
  SpMat I(n, n);
  I.setIdentity();
  return I;
}

} // namespace

SpMat level_embedding(int from_level, int to_level, int dim) {
  if (from_level < 1 || from_level > to_level) throw std::invalid_argument("invalid BPX levels");
  SpMat one = identity((Index{1} << from_level) - 1);
  for (int l = from_level; l < to_level; ++l) one = SpMat(interpolation_1d(l) * one);
  // Direction 1 is the fastest index, so later directions go on the left.
  SpMat out = one;
  for (int s = 1; s < dim; ++s) out = kron(one, out);
  return out;
}

BpxFactor::BpxFactor(int level, int dim) : level_(level), dim_(dim) {
  if (level < 1) throw std::invalid_argument("BPX needs L >= 1");
  if (dim < 1 || dim > 3) throw std::invalid_argument("BPX dimension must be 1, 2 or 3");
  for (int l = 1; l <= level; ++l) {
    Block b{l, std::pow(2.0, -l * (2.0 - dim) / 2.0), level_embedding(l, level, dim)};
    cols_ += b.embedding.cols();
    rows_ = b.embedding.rows();
    blocks_.push_back(std::move(b));
  }
}

Vec BpxFactor::apply(const Vec& y) const {
  if (y.size() != cols_) throw std::invalid_argument("BPX factor: dimension mismatch");
  Vec out = Vec::Zero(rows_);
  Index offset = 0;
  for (const Block& b : blocks_) {
    const Index n = b.embedding.cols();
    out += b.scale * (b.embedding * y.segment(offset, n));
    offset += n;
  }
  return out;
}

Vec BpxFactor::apply_transpose(const Vec& x) const {
  if (x.size() != rows_) throw std::invalid_argument("BPX factor: dimension mismatch");
  Vec out(cols_);
  Index offset = 0;
  for (const Block& b : blocks_) {
    const Index n = b.embedding.cols();
    out.segment(offset, n) = b.scale * (b.embedding.transpose() * x);
    offset += n;
  }
  return out;
}

Mat BpxFactor::dense() const {
  Mat F(rows_, cols_);
  Index offset = 0;
  for (const Block& b : blocks_) {
    F.middleCols(offset, b.embedding.cols()) = b.scale * Mat(b.embedding);
    offset += b.embedding.cols();
  }
  return F;
}

BpxFactor build_bpx(int level, int dim) { return BpxFactor(level, dim); }

BpxBounds bpx_spectral_bounds(const SpMat& local_stiffness, const LocalFactor& factor,
                              double tol) {
  if (local_stiffness.rows() != factor.rows())
    throw std::invalid_argument("BPX bounds: dimension mismatch");
  // Eigenvalues of F F^T A_i, self-adjoint in the A_i inner product.
  auto op = [&](const Vec& x) { return factor.apply(factor.apply_transpose(local_stiffness * x)); };
  auto inner = [&](const Vec& x) -> Vec { return local_stiffness * x; };
  LanczosOptions opts;
  opts.tol = tol;
  const SpectralReport r = extreme_eigs(op, factor.rows(), opts, inner);
  return {r.lambda_min, r.lambda_max};
}

} // namespace schwarzq

#include "schwarzq/block_encoding.hpp"

#include <Eigen/SVD>

#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace schwarzq {

namespace {

void check_dim(Index n) {
  if (n > kMaxEncodingDim)
    throw std::length_error("block-encoding dimension " + std::to_string(n) + " exceeds cap " +
                            std::to_string(kMaxEncodingDim));
}

class DenseOp final : public Operator {
public:
  explicit DenseOp(Mat U) : U_(std::move(U)) {
    if (U_.rows() != U_.cols()) throw std::invalid_argument("unitary must be square");
    if (U_.rows() > kMaxDenseLeaf) throw std::length_error("dense unitary leaf too large");
  }
  Index dim() const override { return U_.rows(); }
  void apply(const Vec& in, Vec& out) const override { out.noalias() = U_ * in; }
  OpPtr transpose() const override { return std::make_shared<DenseOp>(U_.transpose()); }
  std::string kind() const override { return "dense"; }

private:
  Mat U_;
};

class IdentityOp final : public Operator {
public:
  explicit IdentityOp(Index n) : n_(n) {}
  Index dim() const override { return n_; }
  void apply(const Vec& in, Vec& out) const override { out = in; }
  OpPtr transpose() const override { return std::make_shared<IdentityOp>(n_); }
  std::string kind() const override { return "identity"; }

private:
  Index n_;
};

class PermutationOp final : public Operator {
public:
  explicit PermutationOp(std::vector<Index> perm) : perm_(std::move(perm)) {
    std::vector<char> seen(perm_.size(), 0);
    for (Index p : perm_) {
      if (p < 0 || p >= static_cast<Index>(perm_.size()) || seen[static_cast<std::size_t>(p)])
        throw std::invalid_argument("not a permutation");
      seen[static_cast<std::size_t>(p)] = 1;
    }
  }
  Index dim() const override { return static_cast<Index>(perm_.size()); }
  void apply(const Vec& in, Vec& out) const override {
    out.resize(in.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) out[perm_[i]] = in[static_cast<Index>(i)];
  }
  OpPtr transpose() const override {
    std::vector<Index> inv(perm_.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) inv[static_cast<std::size_t>(perm_[i])] = static_cast<Index>(i);
    return std::make_shared<PermutationOp>(std::move(inv));
  }
  std::string kind() const override { return "permutation"; }

private:
  std::vector<Index> perm_;
};

class KronOp final : public Operator {
public:
  KronOp(OpPtr slow, OpPtr fast) : slow_(std::move(slow)), fast_(std::move(fast)) {
    check_dim(slow_->dim() * fast_->dim());
  }
  Index dim() const override { return slow_->dim() * fast_->dim(); }
  void apply(const Vec& in, Vec& out) const override {
    const Index ns = slow_->dim(), nf = fast_->dim();
    Vec tmp(in.size()), piece(nf), res;
    for (Index a = 0; a < ns; ++a) {
      piece = in.segment(a * nf, nf);
      fast_->apply(piece, res);
      tmp.segment(a * nf, nf) = res;
    }
    out.resize(in.size());
    Vec col(ns);
    for (Index b = 0; b < nf; ++b) {
      for (Index a = 0; a < ns; ++a) col[a] = tmp[a * nf + b];
      slow_->apply(col, res);
      for (Index a = 0; a < ns; ++a) out[a * nf + b] = res[a];
    }
  }
  OpPtr transpose() const override {
    return std::make_shared<KronOp>(slow_->transpose(), fast_->transpose());
  }
  std::string kind() const override { return "kron"; }

private:
  OpPtr slow_, fast_;
};

class PaddedOp final : public Operator {
public:
  PaddedOp(OpPtr op, Index dim) : op_(std::move(op)), dim_(dim) {
    if (dim_ < op_->dim()) throw std::invalid_argument("padding below operator dimension");
    check_dim(dim_);
  }
  Index dim() const override { return dim_; }
  void apply(const Vec& in, Vec& out) const override {
    const Index n = op_->dim();
    Vec head = in.head(n), res;
    op_->apply(head, res);
    out = in;
    out.head(n) = res;
  }
  OpPtr transpose() const override { return std::make_shared<PaddedOp>(op_->transpose(), dim_); }
  std::string kind() const override { return "padded"; }

private:
  OpPtr op_;
  Index dim_;
};

class SelectOp final : public Operator {
public:
  SelectOp(std::vector<OpPtr> ops, Index selector_dim) : ops_(std::move(ops)), k_(selector_dim) {
    if (ops_.empty() || static_cast<Index>(ops_.size()) > k_)
      throw std::invalid_argument("select: bad selector size");
    p_ = ops_.front()->dim();
    for (const auto& op : ops_)
      if (op->dim() != p_) throw std::invalid_argument("select: blocks differ in dimension");
    check_dim(k_ * p_);
  }
  Index dim() const override { return k_ * p_; }
  void apply(const Vec& in, Vec& out) const override {
    out = in;
    Vec piece, res;
    for (std::size_t s = 0; s < ops_.size(); ++s) {
      const Index off = static_cast<Index>(s) * p_;
      piece = in.segment(off, p_);
      ops_[s]->apply(piece, res);
      out.segment(off, p_) = res;
    }
  }
  OpPtr transpose() const override {
    std::vector<OpPtr> t;
    for (const auto& op : ops_) t.push_back(op->transpose());
    return std::make_shared<SelectOp>(std::move(t), k_);
  }
  std::string kind() const override { return "select"; }

private:
  std::vector<OpPtr> ops_;
  Index k_;
  Index p_;
};

class SequenceOp final : public Operator {
public:
  explicit SequenceOp(std::vector<OpPtr> ops) : ops_(std::move(ops)) {
    if (ops_.empty()) throw std::invalid_argument("empty operator sequence");
    for (const auto& op : ops_)
      if (op->dim() != ops_.front()->dim()) throw std::invalid_argument("sequence: dimension mismatch");
  }
  Index dim() const override { return ops_.front()->dim(); }
  void apply(const Vec& in, Vec& out) const override {
    Vec cur = in;
    for (const auto& op : ops_) {
      op->apply(cur, out);
      cur.swap(out);
    }
    out.swap(cur);
  }
  OpPtr transpose() const override {
    std::vector<OpPtr> t;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) t.push_back((*it)->transpose());
    return std::make_shared<SequenceOp>(std::move(t));
  }
  std::string kind() const override { return "sequence"; }

private:
  std::vector<OpPtr> ops_;
};

// Permutation of C^P sending idx[r] to r for r < idx.size(); the remaining
// coordinates fill the tail in increasing order.
std::vector<Index> compacting_permutation(const IndexList& idx, Index P) {
  std::vector<Index> perm(static_cast<std::size_t>(P), -1);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= P || perm[static_cast<std::size_t>(idx[r])] != -1)
      throw std::invalid_argument("projector indices must be distinct and in range");
    perm[static_cast<std::size_t>(idx[r])] = static_cast<Index>(r);
  }
  Index next = static_cast<Index>(idx.size());
  for (auto& p : perm)
    if (p == -1) p = next++;
  return perm;
}

bool is_prefix(const IndexList& idx) {
  for (std::size_t r = 0; r < idx.size(); ++r)
    if (idx[r] != static_cast<Index>(r)) return false;
  return true;
}

IndexList iota_list(Index n, Index offset = 0) {
  IndexList out(static_cast<std::size_t>(n));
  std::iota(out.begin(), out.end(), offset);
  return out;
}

// Householder reflection of C^K mapping e_0 to v (unit norm).
Mat reflection_from_e0(const Vec& v) {
  const Index K = v.size();
  Vec u = -v;
  u[0] += 1.0;
  const double nu = u.norm();
  Mat V = Mat::Identity(K, K);
  if (nu < 1e-15) return V;
  u /= nu;
  V -= 2.0 * u * u.transpose();
  return V;
}

} // namespace

Mat Operator::dense() const {
  const Index n = dim();
  if (n > kMaxDenseLeaf) throw std::length_error("operator too large to densify");
  Mat U(n, n);
  Vec e = Vec::Zero(n), col;
  for (Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    apply(e, col);
    U.col(j) = col;
    e[j] = 0.0;
  }
  return U;
}

OpPtr make_dense(Mat U) { return std::make_shared<DenseOp>(std::move(U)); }
OpPtr make_identity(Index n) { return std::make_shared<IdentityOp>(n); }
OpPtr make_permutation(std::vector<Index> perm) {
  return std::make_shared<PermutationOp>(std::move(perm));
}
OpPtr make_kron(OpPtr slow, OpPtr fast) {
  return std::make_shared<KronOp>(std::move(slow), std::move(fast));
}
OpPtr make_padded(OpPtr op, Index dim) {
  if (op->dim() == dim) return op;
  return std::make_shared<PaddedOp>(std::move(op), dim);
}
OpPtr make_select(std::vector<OpPtr> ops, Index selector_dim) {
  return std::make_shared<SelectOp>(std::move(ops), selector_dim);
}
OpPtr make_sequence(std::vector<OpPtr> ops) {
  if (ops.size() == 1) return ops.front();
  return std::make_shared<SequenceOp>(std::move(ops));
}

double unitarity_defect(const Operator& U, const IndexList& columns) {
  const IndexList cols = columns.empty() ? iota_list(U.dim()) : columns;
  Mat W(U.dim(), static_cast<Index>(cols.size()));
  Vec e = Vec::Zero(U.dim()), out;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    e[cols[c]] = 1.0;
    U.apply(e, out);
    W.col(static_cast<Index>(c)) = out;
    e[cols[c]] = 0.0;
  }
  const Mat G = W.transpose() * W - Mat::Identity(W.cols(), W.cols());
  return G.cwiseAbs().maxCoeff();
}

double BlockEncoding::subnormalization() const { return alpha / encoded_norm(); }

Vec BlockEncoding::lift_column(const Vec& x) const {
  if (x.size() != cols()) throw std::invalid_argument("block-encoding: column dimension mismatch");
  Vec full = Vec::Zero(dim());
  for (Index c = 0; c < cols(); ++c) full[col_idx[static_cast<std::size_t>(c)]] = x[c];
  return full;
}

Vec BlockEncoding::apply(const Vec& x) const {
  Vec out;
  U->apply(lift_column(x), out);
  Vec y(rows());
  for (Index r = 0; r < rows(); ++r) y[r] = alpha * out[row_idx[static_cast<std::size_t>(r)]];
  return y;
}

Vec BlockEncoding::apply_transpose(const Vec& y) const {
  return transpose(*this).apply(y);
}

Mat BlockEncoding::encoded() const {
  Mat A(rows(), cols());
  Vec e = Vec::Zero(dim()), out;
  for (Index c = 0; c < cols(); ++c) {
    e[col_idx[static_cast<std::size_t>(c)]] = 1.0;
    U->apply(e, out);
    for (Index r = 0; r < rows(); ++r) A(r, c) = alpha * out[row_idx[static_cast<std::size_t>(r)]];
    e[col_idx[static_cast<std::size_t>(c)]] = 0.0;
  }
  return A;
}

double BlockEncoding::encoded_norm() const {
  const Mat A = encoded();
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(A);
  return svd.singularValues()[0];
}

nlohmann::json BlockEncoding::manifest() const {
  return {{"alpha", alpha},
          {"dim", dim()},
          {"qubits", ceil_log2(dim())},
          {"shape", {rows(), cols()}},
          {"operator", U->kind()},
          {"row_idx", row_idx},
          {"col_idx", col_idx}};
}

BlockEncoding encode_dilation(const Mat& M, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("normalisation factor must be positive");
  const Index m1 = M.rows(), m2 = M.cols();
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  const double norm = s.size() ? s[0] : 0.0;
  if (alpha < norm * (1.0 - 1e-12))
    throw std::invalid_argument("normalisation factor " + std::to_string(alpha) +
                                " is below the norm " + std::to_string(norm));
  const Mat& W = svd.matrixU();
  const Mat& V = svd.matrixV();
  const Mat A = M / alpha;
  Vec c1 = Vec::Ones(m1), c2 = Vec::Ones(m2);
  for (Index k = 0; k < s.size(); ++k) {
    const double t = std::min(s[k] / alpha, 1.0);
    c1[k] = c2[k] = std::sqrt(std::max(0.0, 1.0 - t * t));
  }
  const Index P = next_pow2(m1 + m2);
  Mat U = Mat::Identity(P, P);
  U.topLeftCorner(m1, m2) = A;
  U.block(0, m2, m1, m1) = W * c1.asDiagonal() * W.transpose();
  U.block(m1, 0, m2, m2) = V * c2.asDiagonal() * V.transpose();
  U.block(m1, m2, m2, m1) = -A.transpose();
  // Rows are [A-rows | (I - A^T A)^{1/2} rows]; columns [A-cols | (I - A A^T)^{1/2} cols].
  BlockEncoding be;
  be.alpha = alpha;
  be.U = make_dense(std::move(U));
  be.row_idx = iota_list(m1);
  be.col_idx = iota_list(m2);
  return be;
}

BlockEncoding compose_product(const BlockEncoding& A, const BlockEncoding& B) {
  if (A.cols() != B.rows())
    throw std::invalid_argument("product: inner dimensions differ (" + std::to_string(A.cols()) +
                                " vs " + std::to_string(B.rows()) + ")");
  const Index K = A.cols();
  const Index P = std::max(next_pow2(A.dim()), next_pow2(B.dim()));
  check_dim(2 * P);

  // Route B's encoded rows and A's encoded columns to the first K coordinates.
  std::vector<OpPtr> right{make_padded(B.U, P)};
  if (!is_prefix(B.row_idx)) right.push_back(make_permutation(compacting_permutation(B.row_idx, P)));
  std::vector<OpPtr> left;
  if (!is_prefix(A.col_idx))
    left.push_back(make_permutation(compacting_permutation(A.col_idx, P))->transpose());
  left.push_back(make_padded(A.U, P));

  BlockEncoding out;
  out.alpha = A.alpha * B.alpha;
  if (K == P) {
    std::vector<OpPtr> seq = right;
    seq.insert(seq.end(), left.begin(), left.end());
    out.U = make_sequence(std::move(seq));
    out.row_idx = A.row_idx;
    out.col_idx = B.col_idx;
    return out;
  }

  // Flag qubit (most significant) marks amplitude outside the first K coordinates.
  std::vector<Index> flip(static_cast<std::size_t>(2 * P));
  for (Index f = 0; f < 2; ++f)
    for (Index x = 0; x < P; ++x)
      flip[static_cast<std::size_t>(f * P + x)] = (x >= K ? (1 - f) : f) * P + x;
  const OpPtr I2 = make_identity(2);
  out.U = make_sequence({make_kron(I2, make_sequence(right)), make_permutation(std::move(flip)),
                         make_kron(I2, make_sequence(left))});
  out.row_idx = A.row_idx;
  out.col_idx = B.col_idx;
  return out;
}

BlockEncoding compose_concat_columns(const std::vector<BlockEncoding>& blocks) {
  if (blocks.empty()) throw std::invalid_argument("concatenation of an empty list");
  const Index M = blocks.front().rows();
  Index P = 1;
  for (const auto& b : blocks) {
    if (b.rows() != M) throw std::invalid_argument("concatenation: blocks differ in row count");
    P = std::max(P, next_pow2(b.dim()));
  }
  const Index k = static_cast<Index>(blocks.size());
  const Index K = next_pow2(k);
  check_dim(K * P);

  double sum = 0.0;
  for (const auto& b : blocks) sum += b.alpha * b.alpha;
  const double alpha = std::sqrt(sum);

  std::vector<OpPtr> branch;
  Vec weights = Vec::Zero(K);
  for (Index i = 0; i < k; ++i) {
    const auto& b = blocks[static_cast<std::size_t>(i)];
    weights[i] = b.alpha / alpha;
    std::vector<OpPtr> seq{make_padded(b.U, P)};
    if (!is_prefix(b.row_idx)) seq.push_back(make_permutation(compacting_permutation(b.row_idx, P)));
    branch.push_back(make_sequence(std::move(seq)));
  }

  BlockEncoding out;
  out.alpha = alpha;
  OpPtr select = make_select(std::move(branch), K);
  if (K == 1) {
    out.U = select;
  } else {
    // The reflection is symmetric, so <0| V |i> = alpha_i / alpha.
    out.U = make_sequence({select, make_kron(make_dense(reflection_from_e0(weights)), make_identity(P))});
  }
  out.row_idx = iota_list(M);
  for (Index i = 0; i < k; ++i)
    for (Index c : blocks[static_cast<std::size_t>(i)].col_idx) out.col_idx.push_back(i * P + c);
  return out;
}

BlockEncoding tensor(const BlockEncoding& A, const BlockEncoding& B) {
  BlockEncoding out;
  out.alpha = A.alpha * B.alpha;
  out.U = make_kron(A.U, B.U);
  const Index PB = B.dim();
  for (Index ra : A.row_idx)
    for (Index rb : B.row_idx) out.row_idx.push_back(ra * PB + rb);
  for (Index ca : A.col_idx)
    for (Index cb : B.col_idx) out.col_idx.push_back(ca * PB + cb);
  return out;
}

BlockEncoding transpose(const BlockEncoding& be) {
  BlockEncoding out;
  out.alpha = be.alpha;
  out.U = be.U->transpose();
  out.row_idx = be.col_idx;
  out.col_idx = be.row_idx;
  return out;
}

double reconstruction_error(const BlockEncoding& be, const Mat& target) {
  if (target.rows() != be.rows() || target.cols() != be.cols())
    throw std::invalid_argument("reconstruction: shape mismatch");
  if (target.size() == 0) return 0.0;
  return (be.encoded() - target).cwiseAbs().maxCoeff();
}

void dump_unitary(const std::string& path, const BlockEncoding& be) {
  if (be.dim() > kMaxDumpDim) throw std::length_error("unitary too large to dump");
  static_assert(std::endian::native == std::endian::little, "dump assumes a little-endian host");
  const Mat U = be.U->dense();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (Index r = 0; r < U.rows(); ++r)
    for (Index c = 0; c < U.cols(); ++c) {
      const double v = U(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

} // namespace schwarzq

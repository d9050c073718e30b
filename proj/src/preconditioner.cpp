#include "schwarzq/preconditioner.hpp"

#include "schwarzq/bpx.hpp"

#include <stdexcept>

namespace schwarzq {

const char* to_string(Flavor f) {
  switch (f) {
  case Flavor::as1: return "as1";
  case Flavor::as2: return "as2";
  case Flavor::hybrid: return "hyb";
  }
  return "?";
}

const char* to_string(LocalSolver s) { return s == LocalSolver::exact ? "exact" : "bpx"; }

Flavor flavor_from_string(const std::string& name) {
  if (name == "as1") return Flavor::as1;
  if (name == "as2") return Flavor::as2;
  if (name == "hyb" || name == "hybrid") return Flavor::hybrid;
  throw std::invalid_argument("unknown preconditioner '" + name + "' (expected as1, as2 or hyb)");
}

LocalSolver local_solver_from_string(const std::string& name) {
  if (name == "exact") return LocalSolver::exact;
  if (name == "bpx") return LocalSolver::bpx;
  throw std::invalid_argument("unknown local solver '" + name + "' (expected exact or bpx)");
}

SplitPreconditioner::SplitPreconditioner(const SpMat& A, const SubdomainLayout& layout,
                                         const PreconditionerOptions& options)
    : A_(A), layout_(layout), flavor_(options.flavor), local_(options.local),
      coarse_kind_(CoarseKind::none) {
  if (A.rows() != A.cols() || A.rows() != layout.mesh.num_dofs())
    throw std::invalid_argument("stiffness matrix does not match the layout");

  bool want_coarse = options.use_coarse && options.coarse != CoarseKind::none;
  if (flavor_ == Flavor::as1 && want_coarse)
    throw std::invalid_argument("as1 is one-level: disable the coarse space");
  if (flavor_ == Flavor::hybrid && !want_coarse)
    throw std::invalid_argument("hybrid preconditioner needs a coarse space");

  const int n = layout.count();
  R_.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) R_.push_back(restriction(layout, i));

  if (local_ == LocalSolver::bpx) {
    auto shared = std::make_shared<const BpxFactor>(layout.mesh.level, layout.mesh.dim);
    local_factors_.assign(static_cast<std::size_t>(n), shared);
  } else {
    for (int i = 0; i < n; ++i)
      local_factors_.push_back(
          std::make_shared<const CholeskyInverseFactor>(Mat(local_stiffness(A, layout, i))));
  }

  if (want_coarse) {
    SpMat Z = coarse_space(layout, options.coarse);
    if (Z.cols() > 0) {
      Z_ = std::move(Z);
      coarse_kind_ = options.coarse;
      const Mat ZtAZ = Mat(Z_.transpose() * (A_ * Z_));
      coarse_factor_ = std::make_shared<const CholeskyInverseFactor>(ZtAZ);
    } else if (flavor_ == Flavor::hybrid) {
      throw std::invalid_argument("hybrid preconditioner needs a coarse space, but the layout has none");
    }
  }

  Index offset = 0;
  for (const auto& f : local_factors_) {
    offsets_.push_back(offset);
    offset += f->cols();
  }
  if (coarse_factor_) {
    offsets_.push_back(offset);
    offset += coarse_factor_->cols();
  }
  total_cols_ = offset;
}

Index SplitPreconditioner::block_cols(int block) const {
  if (block < num_local_blocks()) return local_factors_[static_cast<std::size_t>(block)]->cols();
  if (block == num_local_blocks() && coarse_factor_) return coarse_factor_->cols();
  throw std::out_of_range("preconditioner block index out of range");
}

const LocalFactor& SplitPreconditioner::coarse_factor() const {
  if (!coarse_factor_) throw std::logic_error("preconditioner has no coarse block");
  return *coarse_factor_;
}

Vec SplitPreconditioner::coarse_projection(const Vec& x) const {
  const Vec y = Z_.transpose() * (A_ * x);
  return Z_ * coarse_factor_->apply(coarse_factor_->apply_transpose(y));
}

Vec SplitPreconditioner::coarse_projection_transpose(const Vec& x) const {
  const Vec y = Z_.transpose() * x;
  return A_ * (Z_ * coarse_factor_->apply(coarse_factor_->apply_transpose(y)));
}

Vec SplitPreconditioner::apply_Ftilde(const Vec& y) const {
  if (y.size() != total_cols_) throw std::invalid_argument("apply_Ftilde: dimension mismatch");
  Vec local = Vec::Zero(rows());
  for (int i = 0; i < num_local_blocks(); ++i) {
    const auto& f = *local_factors_[static_cast<std::size_t>(i)];
    local += R_[static_cast<std::size_t>(i)].transpose() * f.apply(y.segment(block_offset(i), f.cols()));
  }
  if (flavor_ == Flavor::hybrid) local -= coarse_projection(local);
  if (coarse_factor_) {
    const int c = num_local_blocks();
    local += Z_ * coarse_factor_->apply(y.segment(block_offset(c), coarse_factor_->cols()));
  }
  return local;
}

Vec SplitPreconditioner::apply_Ftilde_T(const Vec& x) const {
  if (x.size() != rows()) throw std::invalid_argument("apply_Ftilde_T: dimension mismatch");
  Vec out(total_cols_);
  const Vec xl = flavor_ == Flavor::hybrid ? Vec(x - coarse_projection_transpose(x)) : x;
  for (int i = 0; i < num_local_blocks(); ++i) {
    const auto& f = *local_factors_[static_cast<std::size_t>(i)];
    out.segment(block_offset(i), f.cols()) = f.apply_transpose(R_[static_cast<std::size_t>(i)] * xl);
  }
  if (coarse_factor_) {
    const int c = num_local_blocks();
    out.segment(block_offset(c), coarse_factor_->cols()) =
        coarse_factor_->apply_transpose(Z_.transpose() * x);
  }
  return out;
}

Vec SplitPreconditioner::apply(const Vec& x) const { return apply_Ftilde(apply_Ftilde_T(x)); }

Mat SplitPreconditioner::dense_Ftilde() const {
  Mat F(rows(), total_cols_);
  Vec e = Vec::Zero(total_cols_);
  for (Index j = 0; j < total_cols_; ++j) {
    e[j] = 1.0;
    F.col(j) = apply_Ftilde(e);
    e[j] = 0.0;
  }
  return F;
}

Mat SplitPreconditioner::dense_H() const {
  // Built from the unsplit definition, independent of apply_Ftilde.
  const Index N = rows();
  Mat H1 = Mat::Zero(N, N);
  for (int i = 0; i < num_local_blocks(); ++i) {
    const Mat Fi = local_factors_[static_cast<std::size_t>(i)]->dense();
    const Mat R = Mat(R_[static_cast<std::size_t>(i)]);
    H1 += R.transpose() * (Fi * Fi.transpose()) * R;
  }
  if (!coarse_factor_) return H1;
  const Mat Z = Mat(Z_);
  const Mat Ad = Mat(A_);
  const Mat coarse = Z * (Z.transpose() * Ad * Z).inverse() * Z.transpose();
  if (flavor_ == Flavor::hybrid) {
    const Mat Q = Mat::Identity(N, N) - coarse * Ad;
    return Q * H1 * Q.transpose() + coarse;
  }
  return H1 + coarse;
}

SplitPreconditioner build_preconditioner(const SpMat& A, const SubdomainLayout& layout,
                                         const PreconditionerOptions& options) {
  return SplitPreconditioner(A, layout, options);
}

Vec apply_split_operator(const SpMat& A, const SplitPreconditioner& P, const Vec& y) {
  return P.apply_Ftilde_T(A * P.apply_Ftilde(y));
}

} // namespace schwarzq

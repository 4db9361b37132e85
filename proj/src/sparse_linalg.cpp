#include "lod/sparse_linalg.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <variant>

#include "lod/errors.hpp"

namespace lod {

struct SparseSolver::Impl {
  using Ldlt = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
  using Lu = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;

  using Cg = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>>;

  SparseMatrix a;
  mutable std::unique_ptr<Ldlt> ldlt;
  std::unique_ptr<Lu> lu;
  std::unique_ptr<Cg> cg;

  void factor_ldlt() const {
    ldlt = std::make_unique<Ldlt>(a);
    bool ok = ldlt->info() == Eigen::Success;
    if (ok) {
      const Vector d = ldlt->vectorD();
      const double dmax = d.cwiseAbs().maxCoeff();
      ok = dmax > 0.0 && d.cwiseAbs().minCoeff() > 1e-14 * dmax;
    }
    if (!ok) throw NumericalError(NumericalError::Kind::Singular, "solve: matrix is singular to working precision");
  }

  template <class Rhs>
  auto raw_solve(const Rhs& b) const {
    using Result = std::conditional_t<Rhs::ColsAtCompileTime == 1, Vector, DenseMatrix>;
    if (cg && !ldlt) {
      Result x(b.rows(), b.cols());
      bool ok = true;
      for (Eigen::Index j = 0; j < b.cols() && ok; ++j) {
        x.col(j) = cg->solve(b.col(j));
        ok = cg->info() == Eigen::Success;
      }
      if (ok) return x;
      factor_ldlt();
    }
    Result x = ldlt ? Result(ldlt->solve(b)) : Result(lu->solve(b));
    return x;
  }
};

SparseSolver::SparseSolver(const SparseMatrix& a, Symmetry symmetry) : impl_(std::make_unique<Impl>()) {
  if (a.rows() != a.cols()) throw NumericalError(NumericalError::Kind::Other, "solve: matrix is not square");
  n_ = static_cast<std::size_t>(a.rows());
  impl_->a = a;
  impl_->a.makeCompressed();
  if (n_ == 0) return;
  if (symmetry == Symmetry::Symmetric) {
    impl_->factor_ldlt();
  } else if (symmetry == Symmetry::SpdIterative) {
    impl_->cg = std::make_unique<Impl::Cg>();
    impl_->cg->setTolerance(1e-13);
    impl_->cg->setMaxIterations(std::max<Eigen::Index>(200, impl_->a.rows() / 4));
    impl_->cg->compute(impl_->a);
  } else {
    impl_->lu = std::make_unique<Impl::Lu>();
    impl_->lu->analyzePattern(impl_->a);
    impl_->lu->factorize(impl_->a);
    if (impl_->lu->info() != Eigen::Success)
      throw NumericalError(NumericalError::Kind::Singular,
                           "solve: matrix is singular to working precision (" + impl_->lu->lastErrorMessage() + ")");
  }
}

SparseSolver::~SparseSolver() = default;
SparseSolver::SparseSolver(SparseSolver&&) noexcept = default;
SparseSolver& SparseSolver::operator=(SparseSolver&&) noexcept = default;

namespace {

template <class Mat>
void check_residual(const SparseMatrix& a, const Mat& x, const Mat& b, Mat* correction_rhs) {
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    const double bn = b.col(j).norm();
    const double rn = (a * x.col(j) - b.col(j)).norm();
    if (!std::isfinite(rn) || rn > kSolveResidualTol * std::max(bn, 1e-300)) {
      if (bn == 0.0 && rn == 0.0) continue;
      if (correction_rhs == nullptr) {
        std::ostringstream os;
        os << "solve: relative residual " << rn / bn << " exceeds " << kSolveResidualTol;
        throw NumericalError(NumericalError::Kind::Residual, os.str());
      }
      *correction_rhs = b - a * x;
      return;
    }
  }
}

template <class Mat>
Mat solve_checked(const SparseSolver::Impl& impl, const Mat& b) {
  Mat x = impl.raw_solve(b);
  Mat r;
  check_residual<Mat>(impl.a, x, b, &r);
  if (r.size() != 0) {
    x += impl.raw_solve(r);
    check_residual<Mat>(impl.a, x, b, nullptr);
  }
  return x;
}

}  // namespace

Vector SparseSolver::solve(const Vector& b) const {
  if (static_cast<std::size_t>(b.size()) != n_)
    throw NumericalError(NumericalError::Kind::Other, "solve: right-hand side has wrong length");
  if (n_ == 0) return Vector();
  return solve_checked<Vector>(*impl_, b);
}

DenseMatrix SparseSolver::solve(const DenseMatrix& b) const {
  if (static_cast<std::size_t>(b.rows()) != n_)
    throw NumericalError(NumericalError::Kind::Other, "solve: right-hand side has wrong length");
  if (n_ == 0 || b.cols() == 0) return DenseMatrix(b.rows(), b.cols());
  return solve_checked<DenseMatrix>(*impl_, b);
}

Vector solve(const SparseMatrix& a, const Vector& b, Symmetry symmetry) {
  return SparseSolver(a, symmetry).solve(b);
}

bool constraint_satisfied(const SparseMatrix& c, const Vector& x) {
  if (c.rows() == 0) return true;
  const double res = (c * x).cwiseAbs().maxCoeff();
  const double xn = x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
  return res <= 1e-9 * xn + 1e-12;
}

std::ptrdiff_t first_dependent_row(const SparseMatrix& c) {
  const Eigen::Index m = c.rows();
  if (m == 0) return -1;
  const DenseMatrix gram = DenseMatrix(c * c.transpose());
  // Cholesky without pivoting, in row order: a vanishing pivot marks the
  // first row lying in the span of its predecessors.
  DenseMatrix l = DenseMatrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double norm2 = gram(i, i);
    for (Eigen::Index j = 0; j < i; ++j) {
      double s = gram(i, j);
      for (Eigen::Index q = 0; q < j; ++q) s -= l(i, q) * l(j, q);
      l(i, j) = l(j, j) > 0.0 ? s / l(j, j) : 0.0;
    }
    double d = norm2;
    for (Eigen::Index q = 0; q < i; ++q) d -= l(i, q) * l(i, q);
    if (!(norm2 > 0.0) || d <= 1e-10 * norm2) return i;
    l(i, i) = std::sqrt(d);
  }
  return -1;
}

DenseMatrix solve_saddle(const SparseMatrix& a, const SparseMatrix& c, const DenseMatrix& b) {
  if (a.rows() != a.cols() || c.cols() != a.cols() || b.rows() != a.rows())
    throw NumericalError(NumericalError::Kind::Other, "solve_saddle: dimension mismatch");
  const SparseSolver factor(a, Symmetry::Symmetric);
  if (c.rows() == 0) return factor.solve(b);

  if (const auto bad = first_dependent_row(c); bad >= 0)
    throw RankDeficientError(static_cast<std::size_t>(bad),
                             "solve_saddle: constraint row " + std::to_string(bad) + " is linearly dependent");

  const DenseMatrix ct = DenseMatrix(c.transpose());
  const DenseMatrix y = factor.solve(ct);  // A^{-1} C^T
  const DenseMatrix schur = c * y;         // C A^{-1} C^T
  const Eigen::LLT<DenseMatrix> schur_llt(schur);
  if (schur_llt.info() != Eigen::Success)
    throw NumericalError(NumericalError::Kind::Singular, "solve_saddle: Schur complement is not positive definite");

  const DenseMatrix x0 = factor.solve(b);
  DenseMatrix x = x0 - y * schur_llt.solve(DenseMatrix(c * x0));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (constraint_satisfied(c, x.col(j))) continue;
    x.col(j) -= y * schur_llt.solve(Vector(c * x.col(j)));
    if (!constraint_satisfied(c, x.col(j)))
      throw NumericalError(NumericalError::Kind::Residual, "solve_saddle: constraint residual bound violated");
  }
  return x;
}

Vector solve_saddle(const SparseMatrix& a, const SparseMatrix& c, const Vector& b) {
  DenseMatrix bm = b;
  return solve_saddle(a, c, bm).col(0);
}

double max_generalized_eig(const DenseMatrix& b, const DenseMatrix& g, const DenseMatrix& deflation) {
  const Eigen::Index n = g.rows();
  if (g.cols() != n || b.rows() != n || b.cols() != n || (deflation.size() && deflation.rows() != n))
    throw NumericalError(NumericalError::Kind::Other, "max_generalized_eig: dimension mismatch");

  DenseMatrix z;
  if (deflation.cols() == 0) {
    z = DenseMatrix::Identity(n, n);
  } else {
    const Eigen::HouseholderQR<DenseMatrix> qr(deflation);
    const DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(n, n);
    const Eigen::Index p = std::min<Eigen::Index>(deflation.cols(), n);
    z = q.rightCols(n - p);
  }
  if (z.cols() == 0) return 0.0;

  DenseMatrix gz = z.transpose() * g * z;
  DenseMatrix bz = z.transpose() * b * z;
  gz = 0.5 * (gz + gz.transpose()).eval();
  bz = 0.5 * (bz + bz.transpose()).eval();

  const Eigen::SelfAdjointEigenSolver<DenseMatrix> geig(gz);
  const double gmax = geig.eigenvalues().cwiseAbs().maxCoeff();
  const double gmin = geig.eigenvalues().minCoeff();
  if (!(gmax > 0.0) || gmin <= 1e-12 * gmax) {
    std::ostringstream os;
    os << "max_generalized_eig: G is not positive definite on the deflated space (min eigenvalue " << gmin
       << ", max " << gmax << ")";
    throw NumericalError(NumericalError::Kind::Indefinite, os.str());
  }

  // G^{-1/2} B G^{-1/2} through the eigenbasis of G.
  const DenseMatrix ginv_half =
      geig.eigenvectors() * geig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * geig.eigenvectors().transpose();
  const DenseMatrix reduced = ginv_half * bz * ginv_half;
  const Eigen::SelfAdjointEigenSolver<DenseMatrix> beig(0.5 * (reduced + reduced.transpose()), Eigen::EigenvaluesOnly);
  return std::max(0.0, beig.eigenvalues().maxCoeff());
}

}  // namespace lod

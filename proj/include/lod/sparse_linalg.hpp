#pragma once

// Sparse direct solves with residual contracts, the patch saddle-point
// solve used by the correctors, and the small generalized eigenproblem
// behind the error indicator. Eigen does the factorizations.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>

namespace lod {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using Triplet = Eigen::Triplet<double>;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// General: sparse LU. Symmetric: LDL^T. SpdIterative: symmetric positive
/// definite, Jacobi-preconditioned conjugate gradients with an LDL^T
/// fallback when CG stalls; meant for well-conditioned systems.
enum class Symmetry { General, Symmetric, SpdIterative };

inline constexpr double kSolveResidualTol = 1e-10;

/// Factorization (or preconditioner) of a square sparse matrix that is
/// reused across solves. Every solve checks
/// ||Ax - b|| <= 1e-10 ||b||, refines once if needed, and throws
/// NumericalError otherwise.
class SparseSolver {
 public:
  SparseSolver(const SparseMatrix& a, Symmetry symmetry);
  ~SparseSolver();
  SparseSolver(SparseSolver&&) noexcept;
  SparseSolver& operator=(SparseSolver&&) noexcept;

  Vector solve(const Vector& b) const;
  DenseMatrix solve(const DenseMatrix& b) const;
  std::size_t size() const noexcept { return n_; }

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
  std::size_t n_ = 0;
};

/// One-shot solve of Ax = b.
Vector solve(const SparseMatrix& a, const Vector& b, Symmetry symmetry = Symmetry::General);

/// Constraint residual bound for saddle-point solutions:
/// ||Cx||_inf <= 1e-9 ||x||_inf + 1e-12.
bool constraint_satisfied(const SparseMatrix& c, const Vector& x);

/// Solves  [A C^T; C 0] [x; mu] = [b; 0]  column by column for every column of b.
/// A must be SPD, C full row rank. Eliminates the multipliers through the
/// Schur complement C A^{-1} C^T, using one factorization of A shared by all
/// right-hand sides. Throws RankDeficientError naming the first dependent
/// row of C, NumericalError if the constraint residual bound is missed.
DenseMatrix solve_saddle(const SparseMatrix& a, const SparseMatrix& c, const DenseMatrix& b);
Vector solve_saddle(const SparseMatrix& a, const SparseMatrix& c, const Vector& b);

/// Index of the first row of C that is (numerically) a combination of the
/// previous rows, or -1 if C has full row rank.
std::ptrdiff_t first_dependent_row(const SparseMatrix& c);

/// Largest gamma with B c = gamma G c over the complement of span(deflation).
/// B, G symmetric positive semidefinite, deflation columns span null(G).
/// Returns 0 if the complement is trivial. Throws NumericalError if G is
/// indefinite on the complement.
double max_generalized_eig(const DenseMatrix& b, const DenseMatrix& g, const DenseMatrix& deflation);

}  // namespace lod

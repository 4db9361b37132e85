#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>

#include "../support/oracles.hpp"
#include "lod/errors.hpp"
#include "lod/fem.hpp"
#include "lod/sparse_linalg.hpp"

using lod::DenseMatrix;
using lod::SparseMatrix;
using lod::Symmetry;
using lod::Vector;

namespace {

SparseMatrix sparse(const DenseMatrix& d) { return d.sparseView(); }

// Largest generalized Rayleigh quotient over a Fibonacci sample of the unit
// sphere in the orthogonal complement of the constants (R^4 -> 3 dims).
double sampled_rayleigh_max(const DenseMatrix& b, const DenseMatrix& g, int samples) {
  const DenseMatrix ones = DenseMatrix::Ones(4, 1);
  const Eigen::HouseholderQR<DenseMatrix> qr(ones);
  const DenseMatrix q = qr.householderQ();
  const DenseMatrix u = q.rightCols(3);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / samples;
    const double r = std::sqrt(1.0 - z * z);
    const Eigen::Vector3d y(r * std::cos(golden * i), r * std::sin(golden * i), z);
    const Vector c = u * y;
    best = std::max(best, c.dot(b * c) / c.dot(g * c));
  }
  return best;
}

}  // namespace

TEST_SUITE("sparse_linalg") {
  TEST_CASE("direct solves") {
    const DenseMatrix id = DenseMatrix::Identity(5, 5);
    std::mt19937_64 rng(1);
    const Vector b = oracle::random_vector(5, rng);
    for (Symmetry s : {Symmetry::General, Symmetry::Symmetric, Symmetry::SpdIterative})
      CHECK((lod::solve(sparse(id), b, s) - b).cwiseAbs().maxCoeff() <= 1e-15);
    DenseMatrix d(2, 2);
    d << 2, 0, 0, 4;
    const Vector x = lod::solve(sparse(d), Vector((Vector(2) << 2, 8).finished()));
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-15));
  }

  TEST_CASE("random SPD system against a dense factorization") {
    std::mt19937_64 rng(2);
    const DenseMatrix a = oracle::random_spd(50, rng);
    const Vector b = oracle::random_vector(50, rng);
    const Vector ref = a.llt().solve(b);
    for (Symmetry s : {Symmetry::General, Symmetry::Symmetric, Symmetry::SpdIterative}) {
      const Vector x = lod::solve(sparse(a), b, s);
      CHECK((x - ref).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((a * x - b).norm() <= 1e-10 * b.norm());
    }
  }

  TEST_CASE("solves are deterministic") {
    std::mt19937_64 rng(3);
    const DenseMatrix a = oracle::random_spd(30, rng);
    const Vector b = oracle::random_vector(30, rng);
    for (Symmetry s : {Symmetry::General, Symmetry::Symmetric, Symmetry::SpdIterative}) {
      const Vector x1 = lod::solve(sparse(a), b, s), x2 = lod::solve(sparse(a), b, s);
      CHECK((x1.array() == x2.array()).all());
    }
  }

  TEST_CASE("singular systems raise a structured error") {
    DenseMatrix a = DenseMatrix::Zero(3, 3);
    a(0, 0) = 1.0;
    a(1, 1) = 2.0;
    const Vector b = Vector::Ones(3);
    for (Symmetry s : {Symmetry::General, Symmetry::Symmetric})
      CHECK_THROWS_AS(lod::solve(sparse(a), b, s), lod::NumericalError);
    DenseMatrix r(2, 2);
    r << 1, 2, 2, 4;
    CHECK_THROWS_AS(lod::solve(sparse(r), Vector::Ones(2)), lod::NumericalError);
  }

  TEST_CASE("saddle-point solve") {
    std::mt19937_64 rng(4);
    const int n = 12, m = 3;
    const DenseMatrix a = oracle::random_spd(n, rng);
    DenseMatrix c = DenseMatrix::Zero(m, n);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        if ((i + j) % 3 != 0) c(i, j) = ud(rng);
    const Vector b = oracle::random_vector(n, rng);

    DenseMatrix kkt = DenseMatrix::Zero(n + m, n + m);
    kkt.topLeftCorner(n, n) = a;
    kkt.topRightCorner(n, m) = c.transpose();
    kkt.bottomLeftCorner(m, n) = c;
    Vector rhs = Vector::Zero(n + m);
    rhs.head(n) = b;
    const Vector ref = kkt.fullPivLu().solve(rhs).head(n);
    const Vector x = lod::solve_saddle(sparse(a), sparse(c), b);
    CHECK((x - ref).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(lod::constraint_satisfied(sparse(c), x));

    SUBCASE("right-hand side in the range of C^T gives zero") {
      const Vector mu = oracle::random_vector(m, rng);
      const Vector z = lod::solve_saddle(sparse(a), sparse(c), Vector(c.transpose() * mu));
      CHECK(z.cwiseAbs().maxCoeff() <= 1e-12 * mu.cwiseAbs().maxCoeff());
    }
    SUBCASE("no constraints reduces to a plain solve") {
      const SparseMatrix empty(0, n);
      const Vector z = lod::solve_saddle(sparse(a), empty, b);
      CHECK((z - a.llt().solve(b)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("multiple right-hand sides") {
      DenseMatrix bb(n, 2);
      bb.col(0) = b;
      bb.col(1) = 2.0 * b;
      const DenseMatrix xx = lod::solve_saddle(sparse(a), sparse(c), bb);
      CHECK((xx.col(0) - ref).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((xx.col(1) - 2.0 * ref).cwiseAbs().maxCoeff() <= 2e-9);
    }
  }

  TEST_CASE("rank-deficient constraints name the dependent row") {
    std::mt19937_64 rng(5);
    const int n = 8;
    const DenseMatrix a = oracle::random_spd(n, rng);
    DenseMatrix c = DenseMatrix::Zero(3, n);
    c.row(0) = oracle::random_vector(n, rng).transpose();
    c.row(1) = oracle::random_vector(n, rng).transpose();
    c.row(2) = 2.0 * c.row(0) - c.row(1);
    CHECK(lod::first_dependent_row(sparse(c)) == 2);
    CHECK(lod::first_dependent_row(sparse(c.topRows(2))) == -1);
    try {
      lod::solve_saddle(sparse(a), sparse(c), Vector(Vector::Ones(n)));
      FAIL("expected RankDeficientError");
    } catch (const lod::RankDeficientError& e) {
      CHECK(e.row() == 2);
    }
  }

  TEST_CASE("generalized eigenvalue examples") {
    const auto em = lod::element_matrices(2, 1.0);
    DenseMatrix g(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) g(i, j) = em.k(i, j);
    const DenseMatrix ones = DenseMatrix::Ones(4, 1);
    CHECK(lod::max_generalized_eig(g, g, ones) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lod::max_generalized_eig(3.0 * g, g, ones) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(lod::max_generalized_eig(DenseMatrix::Zero(4, 4), g, ones) == 0.0);
    const DenseMatrix full = DenseMatrix::Identity(2, 2);
    CHECK(lod::max_generalized_eig(full, full, full) == 0.0);
  }

  TEST_CASE("generalized eigenvalue against the dense solver and sampled Rayleigh quotients") {
    std::mt19937_64 rng(6);
    const auto em = lod::element_matrices(2, 1.0);
    DenseMatrix k(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) k(i, j) = em.k(i, j);
    const DenseMatrix ones = DenseMatrix::Ones(4, 1);
    const DenseMatrix center = DenseMatrix::Identity(4, 4) - ones * ones.transpose() / 4.0;
    for (int trial = 0; trial < 5; ++trial) {
      CAPTURE(trial);
      // G: random positive combination of element stiffnesses, null space = constants
      const auto w = oracle::random_coefficient(4, rng, 0.5, 2.0);
      DenseMatrix g = w[0] * k;
      const DenseMatrix r4 = oracle::random_spd(4, rng, 0.5);
      g += w[1] * center * r4 * center;
      const DenseMatrix bm = oracle::random_spd(4, rng, 0.0);
      const DenseMatrix b = center * bm * center;
      const double gamma = lod::max_generalized_eig(b, g, ones);

      const Eigen::HouseholderQR<DenseMatrix> qr(ones);
      const DenseMatrix u = DenseMatrix(qr.householderQ()).rightCols(3);
      const Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> ges(u.transpose() * b * u, u.transpose() * g * u);
      CHECK(gamma == doctest::Approx(ges.eigenvalues().maxCoeff()).epsilon(1e-10));

      const double sampled = sampled_rayleigh_max(b, g, 10000);
      CHECK(sampled <= gamma * (1.0 + 1e-12));
      CHECK(std::abs(sampled - gamma) <= 1e-3 * gamma);
    }
  }

  TEST_CASE("indefinite Gram matrix is rejected") {
    DenseMatrix g = DenseMatrix::Identity(3, 3);
    g(2, 2) = -1.0;
    const DenseMatrix b = DenseMatrix::Identity(3, 3);
    const DenseMatrix defl = DenseMatrix::Zero(3, 0);
    CHECK_THROWS_AS(lod::max_generalized_eig(b, g, defl), lod::NumericalError);
  }
}

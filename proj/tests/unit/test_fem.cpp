#include <doctest.h>

#include <Eigen/Cholesky>
#include <random>

#include "../support/oracles.hpp"
#include "lod/errors.hpp"
#include "lod/fem.hpp"

using lod::GridHierarchy;
using lod::Level;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("fem") {
  TEST_CASE("element stiffness of the unit square") {
    const auto em = lod::element_matrices(2, 1.0);
    for (int i = 0; i < 4; ++i) CHECK(em.k(i, i) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    // corners 0-1 and 0-2 share an edge, 0-3 are diagonally opposite
    CHECK(em.k(0, 1) == doctest::Approx(-1.0 / 6.0).epsilon(1e-15));
    CHECK(em.k(0, 2) == doctest::Approx(-1.0 / 6.0).epsilon(1e-15));
    CHECK(em.k(0, 3) == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
    CHECK(em.k(1, 2) == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
  }

  TEST_CASE("element mass matrices") {
    const double h = 0.125;
    const auto em = lod::element_matrices(2, h);
    const double ref[4][4] = {{4, 2, 2, 1}, {2, 4, 1, 2}, {2, 1, 4, 2}, {1, 2, 2, 4}};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(em.m(i, j) == doctest::Approx(h * h / 36.0 * ref[i][j]).epsilon(1e-15));
    const auto e1 = lod::element_matrices(1, 0.5);
    CHECK(e1.m(0, 0) == doctest::Approx(2.0 / 12.0).epsilon(1e-15));
    CHECK(e1.m(0, 1) == doctest::Approx(1.0 / 12.0).epsilon(1e-15));
    CHECK(e1.k(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  }

  TEST_CASE("one-dimensional stiffness with one free node") {
    const auto g = GridHierarchy::build(1, 2, 1);
    const std::vector<double> a = {1.0, 1.0};
    const auto op = lod::assemble_stiffness(g, Level::Coarse, a);
    REQUIRE(op.matrix.rows() == 1);
    CHECK(op.matrix.coeff(0, 0) == doctest::Approx(4.0).epsilon(1e-15));
  }

  TEST_CASE("stiffness scales linearly with the coefficient") {
    std::mt19937_64 rng(3);
    const auto g = GridHierarchy::build(1, 3, 2);
    const auto a1 = oracle::random_coefficient(g.num_elements(Level::Fine), rng);
    const auto a2 = oracle::random_coefficient(g.num_elements(Level::Fine), rng);
    std::vector<double> twice(a1.size()), sum(a1.size());
    for (std::size_t i = 0; i < a1.size(); ++i) {
      twice[i] = 2.0 * a1[i];
      sum[i] = a1[i] + a2[i];
    }
    const Eigen::MatrixXd s1 = lod::assemble_stiffness(g, Level::Fine, a1).matrix;
    const Eigen::MatrixXd s2 = lod::assemble_stiffness(g, Level::Fine, a2).matrix;
    const Eigen::MatrixXd st = lod::assemble_stiffness(g, Level::Fine, twice).matrix;
    const Eigen::MatrixXd ss = lod::assemble_stiffness(g, Level::Fine, sum).matrix;
    CHECK(max_abs(st - 2.0 * s1) == 0.0);
    CHECK(max_abs(ss - s1 - s2) <= 1e-13 * max_abs(ss));
  }

  TEST_CASE("stiffness and mass match the quadrature oracle") {
    std::mt19937_64 rng(5);
    for (int dim : {1, 2}) {
      const auto g = GridHierarchy::build(2, 4, dim);
      const auto a = oracle::random_coefficient(g.num_elements(Level::Fine), rng);
      const Eigen::MatrixXd s = lod::assemble_stiffness(g, Level::Fine, a).matrix;
      const Eigen::MatrixXd m = lod::assemble_mass(g, Level::Fine).matrix;
      CHECK(max_abs(s - oracle::fine_stiffness(g, a)) <= 1e-12 * max_abs(s));
      CHECK(max_abs(m - oracle::fine_mass(g)) <= 1e-12 * max_abs(m));
    }
  }

  TEST_CASE("stiffness is positive definite for random positive coefficients") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 5; ++trial) {
      const auto g = GridHierarchy::build(1, 3, 2);
      const auto a = oracle::random_coefficient(g.num_elements(Level::Fine), rng, 0.01, 100.0);
      const Eigen::MatrixXd s = lod::assemble_stiffness(g, Level::Fine, a).matrix;
      CHECK((s - s.transpose()).cwiseAbs().maxCoeff() == 0.0);
      const Eigen::LLT<Eigen::MatrixXd> llt(s);
      CHECK(llt.info() == Eigen::Success);
    }
  }

  TEST_CASE("nonpositive coefficients are rejected") {
    const auto g = GridHierarchy::build(1, 2, 2);
    std::vector<double> a(g.num_elements(Level::Fine), 1.0);
    a[3] = 0.0;
    CHECK_THROWS_AS(lod::assemble_stiffness(g, Level::Fine, a), lod::ConfigError);
    a.pop_back();
    CHECK_THROWS_AS(lod::assemble_stiffness(g, Level::Fine, a), lod::ConfigError);
  }

  TEST_CASE("unconstrained mass sums to the domain volume") {
    for (int dim : {1, 2}) {
      const auto g = GridHierarchy::build(2, 4, dim);
      const Eigen::MatrixXd m = lod::assemble_mass_full(g, Level::Fine);
      CHECK(m.sum() == doctest::Approx(1.0).epsilon(1e-13));
      const Eigen::MatrixXd mc = lod::assemble_mass_full(g, Level::Coarse);
      CHECK(mc.sum() == doctest::Approx(1.0).epsilon(1e-13));
    }
  }

  TEST_CASE("prolongation entries") {
    const auto g = GridHierarchy::build(2, 3, 2);
    const Eigen::MatrixXd p = lod::prolongation(g);
    const auto& ffi = g.free_index(Level::Fine);
    const auto& cfi = g.free_index(Level::Coarse);
    const auto coinciding = ffi[g.node_index(Level::Fine, {2, 2})];
    const auto j = cfi[g.node_index(Level::Coarse, {1, 1})];
    CHECK(p(coinciding, j) == 1.0);
    CHECK(p.row(coinciding).sum() == 1.0);
    const auto midpoint = ffi[g.node_index(Level::Fine, {3, 2})];
    const auto j2 = cfi[g.node_index(Level::Coarse, {2, 1})];
    CHECK(p(midpoint, j) == 0.5);
    CHECK(p(midpoint, j2) == 0.5);
    CHECK(max_abs(p - oracle::prolongation(g)) <= 1e-15);

    std::mt19937_64 rng(1);
    const Eigen::VectorXd w = oracle::random_vector(p.cols(), rng);
    const Eigen::VectorXd fine = p * w;
    const auto& cf = g.free_nodes(Level::Coarse);
    for (std::size_t i = 0; i < cf.size(); ++i) {
      const lod::Coord c = g.node_coord(Level::Coarse, cf[i]);
      const auto row = ffi[g.node_index(Level::Fine, {2 * c[0], 2 * c[1]})];
      CHECK(fine[row] == w[static_cast<Eigen::Index>(i)]);
    }
  }

  TEST_CASE("quasi-interpolation is a projection onto the coarse space") {
    std::mt19937_64 rng(2);
    for (int dim : {1, 2}) {
      const auto g = GridHierarchy::build(2, 4, dim);
      const auto ih = lod::quasi_interpolation(g);
      const Eigen::MatrixXd p = lod::prolongation(g);
      for (int trial = 0; trial < 50; ++trial) {
        const Eigen::VectorXd w = oracle::random_vector(p.cols(), rng);
        CHECK((ih.matrix * (p * w) - w).cwiseAbs().maxCoeff() <= 1e-12 * w.cwiseAbs().maxCoeff());
      }
    }
  }

  TEST_CASE("quasi-interpolation of the constant one away from the boundary") {
    const auto g = GridHierarchy::build(3, 5, 2);
    const auto ih = lod::quasi_interpolation(g);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(ih.matrix.cols());
    const Eigen::VectorXd c = ih.matrix * ones;
    const auto& cf = g.free_nodes(Level::Coarse);
    int checked = 0;
    for (std::size_t i = 0; i < cf.size(); ++i) {
      const lod::Coord x = g.node_coord(Level::Coarse, cf[i]);
      if (x[0] < 2 || x[0] > 6 || x[1] < 2 || x[1] > 6) continue;
      CHECK(c[static_cast<Eigen::Index>(i)] == doctest::Approx(1.0).epsilon(1e-12));
      ++checked;
    }
    CHECK(checked == 25);
  }

  TEST_CASE("quasi-interpolation matches the dense local L2 projection oracle") {
    for (int dim : {1, 2}) {
      const auto g = GridHierarchy::build(1, 3, dim);
      const Eigen::MatrixXd ih = lod::quasi_interpolation(g).matrix;
      const auto dense = oracle::quasi_interpolation(g);
      CHECK(max_abs(ih - dense) <= 1e-12 * max_abs(dense));
      std::mt19937_64 rng(4);
      const Eigen::VectorXd v = oracle::random_vector(ih.cols(), rng);
      CHECK((ih * v - dense * v).cwiseAbs().maxCoeff() <= 1e-12 * v.lpNorm<1>());
    }
    const auto g = GridHierarchy::build(2, 4, 2);
    const Eigen::MatrixXd ih = lod::quasi_interpolation(g).matrix;
    CHECK(max_abs(ih - oracle::quasi_interpolation(g)) <= 1e-12);
  }

  TEST_CASE("quasi-interpolation is L2 stable") {
    std::mt19937_64 rng(6);
    const auto g = GridHierarchy::build(2, 5, 2);
    const auto ih = lod::quasi_interpolation(g);
    const lod::SparseMatrix p = lod::prolongation(g);
    const lod::SparseMatrix m = lod::assemble_mass(g, Level::Fine).matrix;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXd v = oracle::random_vector(p.rows(), rng);
      const Eigen::VectorXd w = p * (ih.matrix * v);
      worst = std::max(worst, std::sqrt(w.dot(m * w) / v.dot(m * v)));
    }
    MESSAGE("largest observed ratio ||P I_H v|| / ||v|| = " << worst);
    CHECK(worst <= 5.0);
  }

  TEST_CASE("load vectors") {
    const auto g = GridHierarchy::build(2, 4, 2);
    const auto zero = [](double, std::array<double, 2>) { return 0.0; };
    const auto one = [](double, std::array<double, 2>) { return 1.0; };
    CHECK(lod::load_vector(g, Level::Fine, zero, 0.3).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd fine = lod::load_vector(g, Level::Fine, one, 0.0);
    const double h = g.width(Level::Fine);
    for (Eigen::Index i = 0; i < fine.size(); ++i) CHECK(fine[i] == doctest::Approx(h * h).epsilon(1e-13));
    // Every free coarse hat integrates to H^2, the boundary hats are missing.
    const Eigen::VectorXd coarse = lod::load_vector(g, Level::Coarse, one, 0.0);
    const double H = g.width(Level::Coarse);
    Eigen::VectorXd hats = Eigen::VectorXd::Zero(coarse.size());
    for (std::size_t e = 0; e < g.num_elements(Level::Fine); ++e) {
      const auto q = oracle::fine_element_quadrature(g, e);
      for (std::size_t qi = 0; qi < q.points.size(); ++qi)
        for (std::size_t j = 0; j < g.free_nodes(Level::Coarse).size(); ++j)
          hats[static_cast<Eigen::Index>(j)] +=
              q.weights[qi] * oracle::hat(g, Level::Coarse, g.free_nodes(Level::Coarse)[j], q.points[qi]);
    }
    CHECK((coarse - hats).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(coarse.sum() == doctest::Approx(1.0 - (1.0 - 9.0 * H * H)).epsilon(1e-13));
  }
}

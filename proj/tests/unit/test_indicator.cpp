#include <doctest.h>

#include <random>
#include <sstream>

#include "../support/checks.hpp"
#include "../support/oracles.hpp"
#include "lod/errors.hpp"
#include "lod/indicator.hpp"

using lod::GridHierarchy;
using lod::Level;

namespace {

lod::CoefficientSpec spec(lod::CoefficientId id, double eps) {
  lod::CoefficientSpec s;
  s.id = id;
  s.epsilon = eps;
  return s;
}

}  // namespace

TEST_SUITE("indicator") {
  TEST_CASE("vanishes for unchanged and globally rescaled coefficients") {
    std::mt19937_64 rng(41);
    const auto g = GridHierarchy::build(3, 5, 2);
    const auto lagged = oracle::random_coefficient(g.num_elements(Level::Fine), rng);
    const auto current = oracle::random_coefficient(g.num_elements(Level::Fine), rng);
    const auto snap = lod::make_snapshot(0.0, lagged);
    for (const auto& c : checks::all_correctors(g, 1, snap)) CHECK(lod::error_indicator(g, c, snap) == 0.0);
    const auto r = checks::indicator_scaling(g, lagged, current, 3.0, 1);
    CHECK(r.magnitude > 0.0);
    CHECK(r.self <= 1e-12);
    CHECK(r.difference <= 1e-9 * r.magnitude);
    const auto p2 = checks::indicator_scaling(g, lagged, current, 2.0, 1);
    CHECK(p2.self == 0.0);
    CHECK(p2.difference == 0.0);
  }

  TEST_CASE("tensor-product coefficient gives machine-zero indicators") {
    const auto g = GridHierarchy::build(3, 7, 2);
    const auto a1 = spec(lod::CoefficientId::A1Tensor, 1.0 / 32.0);
    const auto corr = checks::all_correctors(g, 1, lod::sample(a1, 0.0, g));
    double worst = 0.0;
    for (double t : {0.1, 0.5, 0.93}) {
      const auto snap = lod::sample(a1, t, g);
      for (const auto& c : corr) worst = std::max(worst, lod::error_indicator(g, c, snap));
    }
    CHECK(worst <= 1e-9);
  }

  TEST_CASE("a2 indicators are positive exactly where the patch straddles the modulated square") {
    const auto g = GridHierarchy::build(3, 6, 2);
    const auto a2 = spec(lod::CoefficientId::A2LocalModulation, 1.0 / 16.0);
    const auto corr = checks::all_correctors(g, 1, lod::sample(a2, 0.0, g));
    const auto now = lod::sample(a2, 0.5, g);
    int positive = 0;
    for (const auto& c : corr) {
      const auto p = lod::make_patch(g, c.element, 1);
      // modulated square = coarse element coordinates [2, 6) on each axis
      bool overlaps = true, inside = true;
      for (int a = 0; a < 2; ++a) {
        overlaps = overlaps && p.lo[a] < 6 && p.hi[a] > 2;
        inside = inside && p.lo[a] >= 2 && p.hi[a] <= 6;
      }
      const double e = lod::error_indicator(g, c, now);
      CAPTURE(c.element);
      if (overlaps && !inside) {
        CHECK(e > 1e-6);
        ++positive;
      } else {
        CHECK(e <= 1e-12);
      }
    }
    CHECK(positive > 0);
  }

  TEST_CASE("indicator is positive for perturbed coefficients and larger for larger perturbations") {
    std::mt19937_64 rng(42);
    const auto g = GridHierarchy::build(2, 4, 2);
    const auto base = oracle::random_coefficient(g.num_elements(Level::Fine), rng);
    const auto dir = oracle::random_coefficient(g.num_elements(Level::Fine), rng, -1.0, 1.0);
    const auto corr = checks::all_correctors(g, 1, lod::make_snapshot(0.0, base));
    std::vector<double> prev(corr.size(), 0.0);
    for (double s : {0.01, 0.2}) {
      std::vector<double> cur(base);
      for (std::size_t i = 0; i < cur.size(); ++i) cur[i] *= 1.0 + s * dir[i];
      const auto snap = lod::make_snapshot(1.0, cur);
      for (std::size_t K = 0; K < corr.size(); ++K) {
        const double e = lod::error_indicator(g, corr[K], snap);
        CHECK(e > prev[K]);
        prev[K] = e;
      }
    }
  }

  TEST_CASE("gammas are nonnegative Rayleigh maxima") {
    std::mt19937_64 rng(43);
    const auto g = GridHierarchy::build(3, 5, 2);
    const auto snap = lod::make_snapshot(0.0, oracle::random_coefficient(g.num_elements(Level::Fine), rng));
    const auto c = lod::compute_corrector(g, 27, 2, snap);
    const auto& gam = c.local->indicator_gammas();
    CHECK(gam.size() == 25);
    for (double x : gam) CHECK(x >= 0.0);
    CHECK(gam[c.local->frame().center_element()] > 0.0);
  }

  TEST_CASE("tolerance policy") {
    const std::vector<double> v = {0.0, 2.0, 4.0};
    CHECK(lod::tolerance(v, 0.0) == 0.0);
    CHECK(lod::tolerance(v, 1.0) == 4.0);
    CHECK(lod::tolerance(v, 0.5) == 2.0);
    const std::vector<double> w = {3.0, 1.0, 2.0};
    CHECK(lod::tolerance(w, 0.0) == 1.0);
    CHECK(lod::tolerance(w, 1.0) == 3.0);
    CHECK_THROWS_AS(lod::tolerance(std::vector<double>{}, 0.5), lod::ConfigError);
    CHECK_THROWS_AS(lod::tolerance(v, 1.5), lod::ConfigError);
    CHECK_THROWS_AS(lod::tolerance(v, -0.1), lod::ConfigError);
  }

  TEST_CASE("marking semantics") {
    const std::vector<double> zeros(4, 0.0);
    CHECK(lod::mark(zeros, 0.0).size() == 4);
    const std::vector<double> v = {1.0, 2.0, 3.0};
    CHECK(lod::mark(v, 4.0).empty());
    CHECK(lod::mark(v, 2.0) == std::vector<std::size_t>{1, 2});
    std::mt19937_64 rng(44);
    const auto r = oracle::random_coefficient(50, rng, 0.0, 1.0);
    std::size_t prev = r.size() + 1;
    for (double tol = 0.0; tol <= 1.0; tol += 0.05) {
      const auto m = lod::mark(r, tol);
      CHECK(m.size() <= prev);
      prev = m.size();
      for (std::size_t k : lod::mark(r, tol + 0.05)) CHECK(std::find(m.begin(), m.end(), k) != m.end());
    }
  }

  TEST_CASE("reports and CSV rows") {
    const auto rep = lod::make_report(3, 0.25, {0.5, 0.0, 1.0, 0.75}, 0.5);
    CHECK(rep.tol == 0.5);
    CHECK(rep.marked == std::vector<std::size_t>{0, 2, 3});
    CHECK(rep.update_fraction == 0.75);
    std::ostringstream out;
    const std::vector<lod::IndicatorReport> reps = {rep};
    lod::write_indicator_csv(out, reps);
    CHECK(out.str() == "step,element,E_K,marked\n3,0,0.5,1\n3,1,0,0\n3,2,1,1\n3,3,0.75,1\n");
  }

  TEST_CASE("dimension mismatches are rejected") {
    const auto g = GridHierarchy::build(2, 4, 2);
    const auto snap = lod::make_snapshot(0.0, std::vector<double>(g.num_elements(Level::Fine), 1.0));
    const auto c = lod::compute_corrector(g, 0, 1, snap);
    CHECK_THROWS_AS(lod::error_indicator(c, std::vector<double>(3, 1.0)), lod::ConfigError);
    std::vector<double> bad = lod::restrict_to_patch(snap, lod::make_patch(g, 0, 1));
    bad[0] = -1.0;
    CHECK_THROWS_AS(lod::error_indicator(c, bad), lod::ConfigError);
  }
}

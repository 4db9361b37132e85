#pragma once

// Dense brute-force reference constructions for small grids. Everything is
// built from Gauss quadrature on the fine elements and explicit formulas
// for the hat functions, independent of the library's assembly code.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "lod/grid.hpp"

namespace oracle {

using Dense = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline constexpr std::array<double, 2> kGauss = {0.5 - 0.5 / 1.7320508075688772, 0.5 + 0.5 / 1.7320508075688772};

/// Quadrature points (physical) and weights over one fine element.
struct Quadrature {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;
};

inline Quadrature fine_element_quadrature(const lod::GridHierarchy& g, std::size_t e) {
  const double h = g.width(lod::Level::Fine);
  const lod::Coord c = g.element_coord(lod::Level::Fine, e);
  Quadrature q;
  const int ny = g.dim() == 2 ? 2 : 1;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < 2; ++i) {
      const double x = (c[0] + kGauss[i]) * h;
      const double y = g.dim() == 2 ? (c[1] + kGauss[j]) * h : 0.0;
      q.points.push_back({x, y});
      q.weights.push_back(g.dim() == 2 ? 0.25 * h * h : 0.5 * h);
    }
  return q;
}

/// Hat function of node `v` at `level`, value and gradient at x.
inline double hat(const lod::GridHierarchy& g, lod::Level level, std::size_t v, std::array<double, 2> x,
                  std::array<double, 2>* grad = nullptr) {
  const double w = g.width(level);
  const auto p = g.node_point(level, v);
  std::array<double, 2> f{1.0, 1.0}, df{0.0, 0.0};
  for (int a = 0; a < g.dim(); ++a) {
    const double s = (x[a] - p[a]) / w;
    if (std::abs(s) >= 1.0) {
      f[a] = 0.0;
      df[a] = 0.0;
    } else {
      f[a] = 1.0 - std::abs(s);
      df[a] = (s > 0 ? -1.0 : 1.0) / w;
    }
  }
  if (grad) *grad = {df[0] * f[1], f[0] * df[1]};
  return f[0] * f[1];
}

/// Fine nodes touching fine element e.
inline std::vector<std::size_t> fine_element_nodes(const lod::GridHierarchy& g, std::size_t e) {
  const auto n = g.element_nodes(lod::Level::Fine, e);
  return std::vector<std::size_t>(n.begin(), n.begin() + g.corners());
}

/// Coarse nodes whose hat is nonzero on fine element e.
inline std::vector<std::size_t> coarse_nodes_of_fine_element(const lod::GridHierarchy& g, std::size_t e) {
  const auto n = g.element_nodes(lod::Level::Coarse, g.coarse_parent(e));
  return std::vector<std::size_t>(n.begin(), n.begin() + g.corners());
}

/// Fine free x fine free stiffness (coefficient per fine element) and mass.
inline Dense fine_stiffness(const lod::GridHierarchy& g, std::span<const double> a) {
  const auto& fi = g.free_index(lod::Level::Fine);
  const auto nf = static_cast<Eigen::Index>(g.num_free_nodes(lod::Level::Fine));
  Dense s = Dense::Zero(nf, nf);
  for (std::size_t e = 0; e < g.num_elements(lod::Level::Fine); ++e) {
    const Quadrature q = fine_element_quadrature(g, e);
    const auto nodes = fine_element_nodes(g, e);
    for (std::size_t qi = 0; qi < q.points.size(); ++qi)
      for (std::size_t i : nodes)
        for (std::size_t j : nodes) {
          if (fi[i] < 0 || fi[j] < 0) continue;
          std::array<double, 2> gi, gj;
          hat(g, lod::Level::Fine, i, q.points[qi], &gi);
          hat(g, lod::Level::Fine, j, q.points[qi], &gj);
          s(fi[i], fi[j]) += q.weights[qi] * a[e] * (gi[0] * gj[0] + gi[1] * gj[1]);
        }
  }
  return s;
}

inline Dense fine_mass(const lod::GridHierarchy& g) {
  const auto& fi = g.free_index(lod::Level::Fine);
  const auto nf = static_cast<Eigen::Index>(g.num_free_nodes(lod::Level::Fine));
  Dense m = Dense::Zero(nf, nf);
  for (std::size_t e = 0; e < g.num_elements(lod::Level::Fine); ++e) {
    const Quadrature q = fine_element_quadrature(g, e);
    const auto nodes = fine_element_nodes(g, e);
    for (std::size_t qi = 0; qi < q.points.size(); ++qi)
      for (std::size_t i : nodes)
        for (std::size_t j : nodes) {
          if (fi[i] < 0 || fi[j] < 0) continue;
          m(fi[i], fi[j]) += q.weights[qi] * hat(g, lod::Level::Fine, i, q.points[qi]) *
                             hat(g, lod::Level::Fine, j, q.points[qi]);
        }
  }
  return m;
}

/// Fine free x coarse free: nodal values of the coarse hats.
inline Dense prolongation(const lod::GridHierarchy& g) {
  const auto& ff = g.free_nodes(lod::Level::Fine);
  const auto& cf = g.free_nodes(lod::Level::Coarse);
  Dense p(static_cast<Eigen::Index>(ff.size()), static_cast<Eigen::Index>(cf.size()));
  for (std::size_t i = 0; i < ff.size(); ++i)
    for (std::size_t j = 0; j < cf.size(); ++j)
      p(i, j) = hat(g, lod::Level::Coarse, cf[j], g.node_point(lod::Level::Fine, ff[i]));
  return p;
}

/// I_H as coarse free x fine free: local L2 projection onto the coarse
/// (bi)linear space of every coarse element, then nodal averaging.
inline Dense quasi_interpolation(const lod::GridHierarchy& g) {
  using lod::Level;
  const auto& ffi = g.free_index(Level::Fine);
  const auto& cfi = g.free_index(Level::Coarse);
  const auto nfc = static_cast<Eigen::Index>(g.num_free_nodes(Level::Coarse));
  const auto nff = static_cast<Eigen::Index>(g.num_free_nodes(Level::Fine));
  const int nc = g.corners();
  std::vector<int> share(g.num_nodes(Level::Coarse), 0);
  for (std::size_t K = 0; K < g.num_elements(Level::Coarse); ++K) {
    const auto cn = g.element_nodes(Level::Coarse, K);
    for (int c = 0; c < nc; ++c) ++share[cn[c]];
  }
  Dense ih = Dense::Zero(nfc, nff);
  for (std::size_t K = 0; K < g.num_elements(Level::Coarse); ++K) {
    const auto cn = g.element_nodes(Level::Coarse, K);
    Dense mloc = Dense::Zero(nc, nc);
    Dense b = Dense::Zero(nc, nff);
    for (std::size_t e = 0; e < g.num_elements(Level::Fine); ++e) {
      if (g.coarse_parent(e) != K) continue;
      const Quadrature q = fine_element_quadrature(g, e);
      const auto fn = fine_element_nodes(g, e);
      for (std::size_t qi = 0; qi < q.points.size(); ++qi) {
        std::array<double, 4> lam{};
        for (int c = 0; c < nc; ++c) lam[c] = hat(g, Level::Coarse, cn[c], q.points[qi]);
        for (int c = 0; c < nc; ++c)
          for (int d = 0; d < nc; ++d) mloc(c, d) += q.weights[qi] * lam[c] * lam[d];
        for (std::size_t p : fn) {
          if (ffi[p] < 0) continue;
          const double phi = hat(g, Level::Fine, p, q.points[qi]);
          for (int c = 0; c < nc; ++c) b(c, ffi[p]) += q.weights[qi] * lam[c] * phi;
        }
      }
    }
    const Dense proj = mloc.inverse() * b;  // coefficient of corner c of the projection
    for (int c = 0; c < nc; ++c) {
      if (cfi[cn[c]] < 0) continue;
      ih.row(cfi[cn[c]]) += proj.row(c) / share[cn[c]];
    }
  }
  return ih;
}

/// Ideal (full-domain) correctors: for coarse element K and corner c,
/// q solves  A q + I_H^T mu = b,  I_H q = 0  with
/// b_p = int_K a grad(lambda_c) . grad(phi_p). Columns are fine free nodes.
struct IdealCorrectors {
  std::vector<Dense> per_element;  // fine free x corners
};

inline IdealCorrectors ideal_correctors(const lod::GridHierarchy& g, std::span<const double> a) {
  using lod::Level;
  const Dense s = fine_stiffness(g, a);
  const Dense c = oracle::quasi_interpolation(g);
  const auto nf = s.rows(), nc = c.rows();
  Dense kkt = Dense::Zero(nf + nc, nf + nc);
  kkt.topLeftCorner(nf, nf) = s;
  kkt.topRightCorner(nf, nc) = c.transpose();
  kkt.bottomLeftCorner(nc, nf) = c;
  const Eigen::FullPivLU<Dense> lu(kkt);
  const auto& ffi = g.free_index(Level::Fine);
  IdealCorrectors out;
  const int corners = g.corners();
  for (std::size_t K = 0; K < g.num_elements(Level::Coarse); ++K) {
    const auto cn = g.element_nodes(Level::Coarse, K);
    Dense rhs = Dense::Zero(nf + nc, corners);
    for (std::size_t e = 0; e < g.num_elements(Level::Fine); ++e) {
      if (g.coarse_parent(e) != K) continue;
      const Quadrature q = fine_element_quadrature(g, e);
      for (std::size_t qi = 0; qi < q.points.size(); ++qi)
        for (std::size_t p : fine_element_nodes(g, e)) {
          if (ffi[p] < 0) continue;
          std::array<double, 2> gp;
          hat(g, Level::Fine, p, q.points[qi], &gp);
          for (int j = 0; j < corners; ++j) {
            std::array<double, 2> gl;
            hat(g, Level::Coarse, cn[j], q.points[qi], &gl);
            rhs(ffi[p], j) += q.weights[qi] * a[e] * (gl[0] * gp[0] + gl[1] * gp[1]);
          }
        }
    }
    out.per_element.push_back(lu.solve(rhs).topRows(nf));
  }
  return out;
}

/// Fine free x coarse free matrix of corrected basis functions
/// (P - sum_K Q_K) e_j from ideal correctors.
inline Dense corrected_basis(const lod::GridHierarchy& g, const IdealCorrectors& q) {
  using lod::Level;
  Dense w = oracle::prolongation(g);
  const auto& cfi = g.free_index(Level::Coarse);
  for (std::size_t K = 0; K < g.num_elements(Level::Coarse); ++K) {
    const auto cn = g.element_nodes(Level::Coarse, K);
    for (int j = 0; j < g.corners(); ++j)
      if (cfi[cn[j]] >= 0) w.col(cfi[cn[j]]) -= q.per_element[K].col(j);
  }
  return w;
}

inline Dense random_spd(int n, std::mt19937_64& rng, double shift = 1.0) {
  std::normal_distribution<double> nd;
  Dense r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = nd(rng);
  return r * r.transpose() + shift * Dense::Identity(n, n);
}

inline std::vector<double> random_coefficient(std::size_t n, std::mt19937_64& rng, double lo = 1.0,
                                              double hi = 10.0) {
  std::uniform_real_distribution<double> ud(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = ud(rng);
  return v;
}

inline Vec random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

}  // namespace oracle

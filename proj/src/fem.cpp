#include "lod/fem.hpp"

#include <string>

#include "lod/errors.hpp"

namespace lod {

ElementMatrices element_matrices(int dim, double h) {
  // 1D building blocks; the 2D matrices are their tensor products.
  const double k1[2][2] = {{1.0 / h, -1.0 / h}, {-1.0 / h, 1.0 / h}};
  const double m1[2][2] = {{h / 3.0, h / 6.0}, {h / 6.0, h / 3.0}};
  ElementMatrices em;
  em.corners = 1 << dim;
  for (int i = 0; i < em.corners; ++i)
    for (int j = 0; j < em.corners; ++j) {
      const int ix = i & 1, jx = j & 1;
      if (dim == 1) {
        em.stiffness[i * 4 + j] = k1[ix][jx];
        em.mass[i * 4 + j] = m1[ix][jx];
      } else {
        const int iy = (i >> 1) & 1, jy = (j >> 1) & 1;
        em.stiffness[i * 4 + j] = k1[ix][jx] * m1[iy][jy] + m1[ix][jx] * k1[iy][jy];
        em.mass[i * 4 + j] = m1[ix][jx] * m1[iy][jy];
      }
    }
  return em;
}

namespace {

SparseMatrix assemble_full(const GridHierarchy& grid, Level level, std::span<const double> coefficient,
                           OperatorKind kind) {
  const std::size_t ne = grid.num_elements(level);
  const std::size_t nn = grid.num_nodes(level);
  const ElementMatrices em = element_matrices(grid.dim(), grid.width(level));
  const int nc = em.corners;
  std::vector<Triplet> trip;
  trip.reserve(ne * nc * nc);
  for (std::size_t e = 0; e < ne; ++e) {
    const double a = kind == OperatorKind::Stiffness ? coefficient[e] : 1.0;
    const auto nodes = grid.element_nodes(level, e);
    for (int i = 0; i < nc; ++i)
      for (int j = 0; j < nc; ++j) {
        const double v = kind == OperatorKind::Stiffness ? a * em.k(i, j) : em.m(i, j);
        trip.emplace_back(static_cast<int>(nodes[i]), static_cast<int>(nodes[j]), v);
      }
  }
  SparseMatrix m(static_cast<Eigen::Index>(nn), static_cast<Eigen::Index>(nn));
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

void check_coefficient(const GridHierarchy& grid, Level level, std::span<const double> coefficient) {
  if (coefficient.size() != grid.num_elements(level))
    throw ConfigError("assemble_stiffness: expected " + std::to_string(grid.num_elements(level)) +
                      " coefficient values, got " + std::to_string(coefficient.size()));
  for (std::size_t e = 0; e < coefficient.size(); ++e)
    if (!(coefficient[e] > 0.0))
      throw ConfigError("assemble_stiffness: nonpositive coefficient at element " + std::to_string(e));
}

SparseMatrix selection(const GridHierarchy& grid, Level level) {
  const auto& free = grid.free_nodes(level);
  SparseMatrix s(static_cast<Eigen::Index>(free.size()), static_cast<Eigen::Index>(grid.num_nodes(level)));
  std::vector<Triplet> trip;
  trip.reserve(free.size());
  for (std::size_t i = 0; i < free.size(); ++i) trip.emplace_back(static_cast<int>(i), static_cast<int>(free[i]), 1.0);
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

}  // namespace

SparseMatrix assemble_stiffness_full(const GridHierarchy& grid, Level level, std::span<const double> coefficient) {
  check_coefficient(grid, level, coefficient);
  return assemble_full(grid, level, coefficient, OperatorKind::Stiffness);
}

SparseMatrix assemble_mass_full(const GridHierarchy& grid, Level level) {
  return assemble_full(grid, level, {}, OperatorKind::Mass);
}

SparseMatrix restrict_to_free(const GridHierarchy& grid, Level level, const SparseMatrix& full) {
  const SparseMatrix s = selection(grid, level);
  SparseMatrix r = s * full * s.transpose();
  r.makeCompressed();
  return r;
}

SparseMatrix restrict_rows_to_free(const GridHierarchy& grid, Level level, const SparseMatrix& full) {
  SparseMatrix r = selection(grid, level) * full;
  r.makeCompressed();
  return r;
}

AssembledOperator assemble_stiffness(const GridHierarchy& grid, Level level, std::span<const double> coefficient,
                                     std::uint64_t coefficient_id) {
  std::vector<double> averaged;
  if (level == Level::Coarse && coefficient.size() == grid.num_elements(Level::Fine) &&
      coefficient.size() != grid.num_elements(Level::Coarse)) {
    averaged = coarse_average(grid, coefficient);
    coefficient = averaged;
  }
  AssembledOperator op;
  op.level = level;
  op.kind = OperatorKind::Stiffness;
  op.coefficient_id = coefficient_id;
  op.matrix = restrict_to_free(grid, level, assemble_stiffness_full(grid, level, coefficient));
  return op;
}

AssembledOperator assemble_mass(const GridHierarchy& grid, Level level) {
  AssembledOperator op;
  op.level = level;
  op.kind = OperatorKind::Mass;
  op.matrix = restrict_to_free(grid, level, assemble_mass_full(grid, level));
  return op;
}

std::vector<double> coarse_average(const GridHierarchy& grid, std::span<const double> fine_values) {
  std::vector<double> out(grid.num_elements(Level::Coarse), 0.0);
  double per = 1.0;
  for (int a = 0; a < grid.dim(); ++a) per *= grid.refinement();
  for (std::size_t e = 0; e < fine_values.size(); ++e) out[grid.coarse_parent(e)] += fine_values[e];
  for (double& v : out) v /= per;
  return out;
}

DenseMatrix local_prolongation(const GridHierarchy& grid) {
  const int r = grid.refinement();
  const int nx = r + 1, ny = grid.dim() > 1 ? r + 1 : 1;
  DenseMatrix p(nx * ny, grid.corners());
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      const double xi[2] = {static_cast<double>(x) / r, static_cast<double>(y) / r};
      for (int c = 0; c < grid.corners(); ++c) {
        double w = 1.0;
        for (int a = 0; a < grid.dim(); ++a) w *= ((c >> a) & 1) ? xi[a] : 1.0 - xi[a];
        p(x + nx * y, c) = w;
      }
    }
  return p;
}

SparseMatrix prolongation(const GridHierarchy& grid) {
  const int r = grid.refinement();
  const int nc = grid.n_coarse();
  const auto& fine_free = grid.free_nodes(Level::Fine);
  const auto& coarse_idx = grid.free_index(Level::Coarse);
  std::vector<Triplet> trip;
  trip.reserve(fine_free.size() * grid.corners());
  for (std::size_t i = 0; i < fine_free.size(); ++i) {
    const Coord f = grid.node_coord(Level::Fine, fine_free[i]);
    Coord ce{0, 0};
    double xi[2] = {0.0, 0.0};
    for (int a = 0; a < grid.dim(); ++a) {
      ce[a] = std::min(f[a] / r, nc - 1);
      xi[a] = static_cast<double>(f[a] - ce[a] * r) / r;
    }
    const auto corners = grid.element_nodes(Level::Coarse, grid.element_index(Level::Coarse, ce));
    for (int c = 0; c < grid.corners(); ++c) {
      double w = 1.0;
      for (int a = 0; a < grid.dim(); ++a) w *= ((c >> a) & 1) ? xi[a] : 1.0 - xi[a];
      const auto j = coarse_idx[corners[c]];
      if (w != 0.0 && j >= 0) trip.emplace_back(static_cast<int>(i), static_cast<int>(j), w);
    }
  }
  SparseMatrix p(static_cast<Eigen::Index>(fine_free.size()),
                 static_cast<Eigen::Index>(grid.num_free_nodes(Level::Coarse)));
  p.setFromTriplets(trip.begin(), trip.end());
  p.makeCompressed();
  return p;
}

InterpolationOperator quasi_interpolation(const GridHierarchy& grid) {
  const int r = grid.refinement();
  const int nx = r + 1, ny = grid.dim() > 1 ? r + 1 : 1;
  const int nloc = nx * ny;

  // Fine mass on the fine elements of one coarse element, local numbering.
  const ElementMatrices em = element_matrices(grid.dim(), grid.width(Level::Fine));
  DenseMatrix mf = DenseMatrix::Zero(nloc, nloc);
  for (int ey = 0; ey < (grid.dim() > 1 ? r : 1); ++ey)
    for (int ex = 0; ex < r; ++ex) {
      int loc[4];
      for (int c = 0; c < em.corners; ++c) loc[c] = (ex + (c & 1)) + nx * (ey + ((c >> 1) & 1));
      for (int i = 0; i < em.corners; ++i)
        for (int j = 0; j < em.corners; ++j) mf(loc[i], loc[j]) += em.m(i, j);
    }
  const DenseMatrix p = local_prolongation(grid);
  const DenseMatrix pm = p.transpose() * mf;  // 2^d x nloc
  const DenseMatrix mc = pm * p;              // coarse element mass
  InterpolationOperator op;
  op.local = mc.ldlt().solve(pm);

  const std::size_t nn = grid.num_nodes(Level::Coarse);
  op.sharing.assign(nn, 0);
  for (std::size_t e = 0; e < grid.num_elements(Level::Coarse); ++e) {
    const auto nodes = grid.element_nodes(Level::Coarse, e);
    for (int c = 0; c < grid.corners(); ++c) ++op.sharing[nodes[c]];
  }

  const auto& cidx = grid.free_index(Level::Coarse);
  const auto& fidx = grid.free_index(Level::Fine);
  std::vector<Triplet> trip;
  for (std::size_t e = 0; e < grid.num_elements(Level::Coarse); ++e) {
    const Coord ce = grid.element_coord(Level::Coarse, e);
    const auto nodes = grid.element_nodes(Level::Coarse, e);
    for (int c = 0; c < grid.corners(); ++c) {
      const auto row = cidx[nodes[c]];
      if (row < 0) continue;
      const double w = 1.0 / op.sharing[nodes[c]];
      for (int ly = 0; ly < ny; ++ly)
        for (int lx = 0; lx < nx; ++lx) {
          const std::size_t fnode = grid.node_index(Level::Fine, {ce[0] * r + lx, ce[1] * r + ly});
          const auto col = fidx[fnode];
          const double v = op.local(c, lx + nx * ly);
          if (col >= 0 && v != 0.0) trip.emplace_back(static_cast<int>(row), static_cast<int>(col), w * v);
        }
    }
  }
  op.matrix = SparseMatrix(static_cast<Eigen::Index>(grid.num_free_nodes(Level::Coarse)),
                           static_cast<Eigen::Index>(grid.num_free_nodes(Level::Fine)));
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.matrix.makeCompressed();
  return op;
}

Vector fine_nodal_values(const GridHierarchy& grid, const SpaceTimeFunction& f, double t) {
  const std::size_t nn = grid.num_nodes(Level::Fine);
  Vector v(static_cast<Eigen::Index>(nn));
  for (std::size_t i = 0; i < nn; ++i) v[static_cast<Eigen::Index>(i)] = f(t, grid.node_point(Level::Fine, i));
  return v;
}

Vector load_vector(const GridHierarchy& grid, Level level, const SpaceTimeFunction& f, double t) {
  const SparseMatrix mass_rows = restrict_rows_to_free(grid, Level::Fine, assemble_mass_full(grid, Level::Fine));
  const Vector fine = mass_rows * fine_nodal_values(grid, f, t);
  if (level == Level::Fine) return fine;
  return prolongation(grid).transpose() * fine;
}

}  // namespace lod

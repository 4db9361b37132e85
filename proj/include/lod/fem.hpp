#pragma once

// Lowest-order Lagrange (linear / bilinear) kernels on either grid level.
// Coefficients are constant per fine element and every integral is exact
// for that representation.

#include <array>
#include <cstdint>
#include <functional>
#include <span>

#include "lod/grid.hpp"
#include "lod/sparse_linalg.hpp"

namespace lod {

/// 2^d x 2^d reference matrices of one element of width h, lexicographic
/// corners. Stored row-major in a 4x4 buffer (d = 1 uses the top-left 2x2).
struct ElementMatrices {
  int corners = 4;
  std::array<double, 16> stiffness{};  // int grad(phi_i) . grad(phi_j) for a == 1
  std::array<double, 16> mass{};       // int phi_i phi_j

  double k(int i, int j) const noexcept { return stiffness[i * 4 + j]; }
  double m(int i, int j) const noexcept { return mass[i * 4 + j]; }
};

ElementMatrices element_matrices(int dim, double h);

enum class OperatorKind { Mass, Stiffness };

struct AssembledOperator {
  Level level = Level::Fine;
  OperatorKind kind = OperatorKind::Mass;
  SparseMatrix matrix;             // free x free
  std::uint64_t coefficient_id = 0;  // 0 for mass
};

/// Per-element coefficient values at `level` (for level = Coarse, one value
/// per coarse element). Throws ConfigError for nonpositive or missing values.
AssembledOperator assemble_stiffness(const GridHierarchy& grid, Level level, std::span<const double> coefficient,
                                     std::uint64_t coefficient_id = 0);
AssembledOperator assemble_mass(const GridHierarchy& grid, Level level);

/// Operators over all nodes, Dirichlet nodes included.
SparseMatrix assemble_stiffness_full(const GridHierarchy& grid, Level level, std::span<const double> coefficient);
SparseMatrix assemble_mass_full(const GridHierarchy& grid, Level level);

/// Restriction of a full-node matrix to free rows and columns.
SparseMatrix restrict_to_free(const GridHierarchy& grid, Level level, const SparseMatrix& full);
SparseMatrix restrict_rows_to_free(const GridHierarchy& grid, Level level, const SparseMatrix& full);

/// Averages fine-element values over each coarse element.
std::vector<double> coarse_average(const GridHierarchy& grid, std::span<const double> fine_values);

/// Values of the 2^d coarse shape functions of one coarse element at its
/// (r+1)^d fine nodes; rows = local fine nodes (lexicographic), cols = corners.
DenseMatrix local_prolongation(const GridHierarchy& grid);

/// Fine free nodes x coarse free nodes; column j is the fine nodal
/// interpolant of coarse basis function j.
SparseMatrix prolongation(const GridHierarchy& grid);

/// Quasi-interpolation I_H: element-wise L2 projection onto the local
/// (bi)linear space of each coarse element, followed by averaging over the
/// coarse elements sharing a node. Dirichlet coarse nodes are dropped.
struct InterpolationOperator {
  SparseMatrix matrix;      // coarse free x fine free
  DenseMatrix local;        // 2^d x (r+1)^d, the local L2 projection of one coarse element
  std::vector<int> sharing; // coarse node -> number of coarse elements containing it
};

InterpolationOperator quasi_interpolation(const GridHierarchy& grid);

using SpaceTimeFunction = std::function<double(double t, std::array<double, 2> x)>;

/// Load vector over free nodes at `level`: f is nodally interpolated on the
/// fine grid, multiplied by the full fine mass matrix, and for the coarse
/// level restricted through the transposed prolongation.
Vector load_vector(const GridHierarchy& grid, Level level, const SpaceTimeFunction& f, double t);

/// Fine nodal interpolant of f over all fine nodes.
Vector fine_nodal_values(const GridHierarchy& grid, const SpaceTimeFunction& f, double t);

}  // namespace lod

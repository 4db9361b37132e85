#pragma once

// Nested uniform tensor-product grids on the unit box [0,1]^d, d in {1,2}.
//
// Numbering is lexicographic with x fastest, for elements and nodes alike.
// Axes beyond `dim()` are degenerate (one element, one node) so that the
// same two-index loops serve both dimensions.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace lod {

enum class Level { Coarse, Fine };

using Coord = std::array<int, 2>;

class GridHierarchy {
 public:
  /// n_coarse = 2^coarse_exp, n_fine = 2^fine_exp elements per axis.
  /// Throws ConfigError unless fine_exp > coarse_exp >= 1 and dim in {1,2}.
  static GridHierarchy build(int coarse_exp, int fine_exp, int dim);

  int dim() const noexcept { return dim_; }
  int coarse_exp() const noexcept { return coarse_exp_; }
  int fine_exp() const noexcept { return fine_exp_; }
  int n_coarse() const noexcept { return 1 << coarse_exp_; }
  int n_fine() const noexcept { return 1 << fine_exp_; }
  int refinement() const noexcept { return 1 << (fine_exp_ - coarse_exp_); }

  int n(Level level) const noexcept { return level == Level::Coarse ? n_coarse() : n_fine(); }
  double width(Level level) const noexcept { return 1.0 / n(level); }
  int corners() const noexcept { return 1 << dim_; }

  /// Elements / nodes along `axis` (1 for degenerate axes).
  int elements_along(Level level, int axis) const noexcept { return axis < dim_ ? n(level) : 1; }
  int nodes_along(Level level, int axis) const noexcept { return axis < dim_ ? n(level) + 1 : 1; }

  std::size_t num_elements(Level level) const noexcept;
  std::size_t num_nodes(Level level) const noexcept;
  std::size_t num_free_nodes(Level level) const noexcept;

  std::size_t element_index(Level level, Coord c) const noexcept {
    return static_cast<std::size_t>(c[0]) + static_cast<std::size_t>(c[1]) * elements_along(level, 0);
  }
  Coord element_coord(Level level, std::size_t e) const noexcept {
    const auto nx = static_cast<std::size_t>(elements_along(level, 0));
    return {static_cast<int>(e % nx), static_cast<int>(e / nx)};
  }
  std::size_t node_index(Level level, Coord c) const noexcept {
    return static_cast<std::size_t>(c[0]) + static_cast<std::size_t>(c[1]) * nodes_along(level, 0);
  }
  Coord node_coord(Level level, std::size_t v) const noexcept {
    const auto nx = static_cast<std::size_t>(nodes_along(level, 0));
    return {static_cast<int>(v % nx), static_cast<int>(v / nx)};
  }

  /// Node on the boundary of the unit box (homogeneous Dirichlet).
  bool is_boundary_node(Level level, std::size_t v) const noexcept;

  /// Global node ids of the 2^d corners of element e; corner bit a selects
  /// the upper end along axis a.
  std::array<std::size_t, 4> element_nodes(Level level, std::size_t e) const noexcept;

  /// Free (non-Dirichlet) numbering: node -> free index or -1.
  const std::vector<std::int64_t>& free_index(Level level) const noexcept {
    return level == Level::Coarse ? coarse_free_index_ : fine_free_index_;
  }
  /// Free index -> node id.
  const std::vector<std::size_t>& free_nodes(Level level) const noexcept {
    return level == Level::Coarse ? coarse_free_nodes_ : fine_free_nodes_;
  }

  /// Physical coordinates of a node / element midpoint.
  std::array<double, 2> node_point(Level level, std::size_t v) const noexcept;
  std::array<double, 2> element_midpoint(Level level, std::size_t e) const noexcept;

  /// Coarse element containing fine element e.
  std::size_t coarse_parent(std::size_t fine_element) const noexcept;

 private:
  GridHierarchy(int coarse_exp, int fine_exp, int dim);
  void number_free(Level level, std::vector<std::int64_t>& idx, std::vector<std::size_t>& nodes) const;

  int dim_;
  int coarse_exp_;
  int fine_exp_;
  std::vector<std::int64_t> coarse_free_index_, fine_free_index_;
  std::vector<std::size_t> coarse_free_nodes_, fine_free_nodes_;
};

/// Coarse-element patch of radius k around a coarse element, clipped to the
/// unit box. Boxes are half-open in element coordinates.
struct Patch {
  std::size_t center_element = 0;
  int k = 0;
  Coord lo{0, 0};  // first coarse element per axis
  Coord hi{1, 1};  // one past the last coarse element per axis
  Coord center{0, 0};

  std::vector<std::size_t> coarse_elements;  // global ids, local lexicographic order
  std::vector<std::size_t> fine_elements;    // global ids, local lexicographic order
  std::vector<std::size_t> fine_nodes;       // global ids, local lexicographic order
  std::vector<std::size_t> free_fine_nodes;  // global ids of nodes strictly inside the patch
  std::vector<std::size_t> free_local;       // positions of free_fine_nodes within fine_nodes

  /// Coarse elements per axis inside the patch.
  Coord coarse_extent() const noexcept { return {hi[0] - lo[0], hi[1] - lo[1]}; }
};

/// Closed-form box patch (equals the one-layer recursion on tensor grids).
Patch make_patch(const GridHierarchy& grid, std::size_t coarse_element, int k);

/// Coarse element set obtained by applying the one-layer "touching elements"
/// recursion k times. Slow; used to cross-check `make_patch`.
std::vector<std::size_t> patch_by_recursion(const GridHierarchy& grid, std::size_t coarse_element, int k);

}  // namespace lod

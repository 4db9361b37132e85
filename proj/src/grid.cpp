#include "lod/grid.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "lod/errors.hpp"

namespace lod {

GridHierarchy GridHierarchy::build(int coarse_exp, int fine_exp, int dim) {
  if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2, got " + std::to_string(dim));
  if (coarse_exp < 1) throw ConfigError("coarse_exp must be >= 1, got " + std::to_string(coarse_exp));
  if (fine_exp <= coarse_exp)
    throw ConfigError("fine_exp (" + std::to_string(fine_exp) + ") must exceed coarse_exp (" +
                      std::to_string(coarse_exp) + ")");
  if (fine_exp > (dim == 1 ? 20 : 12)) throw ConfigError("fine_exp too large: " + std::to_string(fine_exp));
  return GridHierarchy(coarse_exp, fine_exp, dim);
}

GridHierarchy::GridHierarchy(int coarse_exp, int fine_exp, int dim)
    : dim_(dim), coarse_exp_(coarse_exp), fine_exp_(fine_exp) {
  number_free(Level::Coarse, coarse_free_index_, coarse_free_nodes_);
  number_free(Level::Fine, fine_free_index_, fine_free_nodes_);
}

void GridHierarchy::number_free(Level level, std::vector<std::int64_t>& idx, std::vector<std::size_t>& nodes) const {
  const std::size_t nn = num_nodes(level);
  idx.assign(nn, -1);
  nodes.clear();
  for (std::size_t v = 0; v < nn; ++v) {
    if (is_boundary_node(level, v)) continue;
    idx[v] = static_cast<std::int64_t>(nodes.size());
    nodes.push_back(v);
  }
}

std::size_t GridHierarchy::num_elements(Level level) const noexcept {
  return static_cast<std::size_t>(elements_along(level, 0)) * elements_along(level, 1);
}

std::size_t GridHierarchy::num_nodes(Level level) const noexcept {
  return static_cast<std::size_t>(nodes_along(level, 0)) * nodes_along(level, 1);
}

std::size_t GridHierarchy::num_free_nodes(Level level) const noexcept {
  std::size_t m = 1;
  for (int a = 0; a < dim_; ++a) m *= static_cast<std::size_t>(n(level) - 1);
  return m;
}

bool GridHierarchy::is_boundary_node(Level level, std::size_t v) const noexcept {
  const Coord c = node_coord(level, v);
  for (int a = 0; a < dim_; ++a)
    if (c[a] == 0 || c[a] == n(level)) return true;
  return false;
}

std::array<std::size_t, 4> GridHierarchy::element_nodes(Level level, std::size_t e) const noexcept {
  const Coord c = element_coord(level, e);
  std::array<std::size_t, 4> out{};
  for (int corner = 0; corner < corners(); ++corner)
    out[corner] = node_index(level, {c[0] + (corner & 1), c[1] + ((corner >> 1) & 1)});
  return out;
}

std::array<double, 2> GridHierarchy::node_point(Level level, std::size_t v) const noexcept {
  const Coord c = node_coord(level, v);
  const double w = width(level);
  return {c[0] * w, dim_ > 1 ? c[1] * w : 0.0};
}

std::array<double, 2> GridHierarchy::element_midpoint(Level level, std::size_t e) const noexcept {
  const Coord c = element_coord(level, e);
  const double w = width(level);
  return {(c[0] + 0.5) * w, dim_ > 1 ? (c[1] + 0.5) * w : 0.0};
}

std::size_t GridHierarchy::coarse_parent(std::size_t fine_element) const noexcept {
  const Coord c = element_coord(Level::Fine, fine_element);
  const int r = refinement();
  return element_index(Level::Coarse, {c[0] / r, dim_ > 1 ? c[1] / r : 0});
}

Patch make_patch(const GridHierarchy& grid, std::size_t coarse_element, int k) {
  if (coarse_element >= grid.num_elements(Level::Coarse))
    throw ConfigError("coarse element index out of range: " + std::to_string(coarse_element));
  if (k < 0) throw ConfigError("patch radius must be >= 0");

  Patch p;
  p.center_element = coarse_element;
  p.k = k;
  p.center = grid.element_coord(Level::Coarse, coarse_element);
  for (int a = 0; a < 2; ++a) {
    if (a < grid.dim()) {
      p.lo[a] = std::max(0, p.center[a] - k);
      p.hi[a] = std::min(grid.n_coarse(), p.center[a] + k + 1);
    } else {
      p.lo[a] = 0;
      p.hi[a] = 1;
    }
  }

  for (int y = p.lo[1]; y < p.hi[1]; ++y)
    for (int x = p.lo[0]; x < p.hi[0]; ++x) p.coarse_elements.push_back(grid.element_index(Level::Coarse, {x, y}));

  const int r = grid.refinement();
  Coord flo{}, fhi{};  // fine element box
  for (int a = 0; a < 2; ++a) {
    flo[a] = a < grid.dim() ? p.lo[a] * r : 0;
    fhi[a] = a < grid.dim() ? p.hi[a] * r : 1;
  }
  for (int y = flo[1]; y < fhi[1]; ++y)
    for (int x = flo[0]; x < fhi[0]; ++x) p.fine_elements.push_back(grid.element_index(Level::Fine, {x, y}));

  // Fine nodes: closed box; degenerate axis has a single node row.
  const int ny_hi = grid.dim() > 1 ? fhi[1] : 0;
  for (int y = flo[1]; y <= ny_hi; ++y)
    for (int x = flo[0]; x <= fhi[0]; ++x) {
      const std::size_t local = p.fine_nodes.size();
      p.fine_nodes.push_back(grid.node_index(Level::Fine, {x, y}));
      bool interior = x > flo[0] && x < fhi[0];
      if (grid.dim() > 1) interior = interior && y > flo[1] && y < fhi[1];
      if (interior) {
        p.free_fine_nodes.push_back(p.fine_nodes.back());
        p.free_local.push_back(local);
      }
    }
  return p;
}

std::vector<std::size_t> patch_by_recursion(const GridHierarchy& grid, std::size_t coarse_element, int k) {
  std::set<std::size_t> current{coarse_element};
  const std::size_t ne = grid.num_elements(Level::Coarse);
  for (int layer = 0; layer < k; ++layer) {
    // An element belongs to the next layer if its closure shares a point
    // with the closure of the current patch, i.e. it shares a node.
    std::set<std::size_t> nodes;
    for (std::size_t e : current)
      for (int c = 0; c < grid.corners(); ++c) nodes.insert(grid.element_nodes(Level::Coarse, e)[c]);
    std::set<std::size_t> next;
    for (std::size_t e = 0; e < ne; ++e) {
      const auto en = grid.element_nodes(Level::Coarse, e);
      for (int c = 0; c < grid.corners(); ++c)
        if (nodes.count(en[c])) {
          next.insert(e);
          break;
        }
    }
    current = std::move(next);
  }
  return {current.begin(), current.end()};
}

}  // namespace lod

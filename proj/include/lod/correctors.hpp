#pragma once

// Patch-local finescale correctors and Petrov-Galerkin LOD matrices.
//
// For a coarse element K with patch U = U_k(K) and each coarse shape
// function lambda_j of K, the corrector q_j lies in the kernel of I_H,
// vanishes on the boundary of U, and satisfies
//
//   (a grad q_j, grad w)_U = (a grad lambda_j, grad w)_K   for all such w.
//
// A corrector only depends on the patch shape (extent, position of K,
// which sides touch the domain boundary) and the coefficient values on the
// patch, so identical local problems are solved once and shared.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "lod/coefficients.hpp"
#include "lod/fem.hpp"
#include "lod/grid.hpp"
#include "lod/sparse_linalg.hpp"

namespace lod {

/// Shape of a patch relative to its center element; everything a local
/// corrector problem depends on besides the coefficient.
struct PatchShape {
  Coord extent{1, 1};  // coarse elements per axis
  Coord offset{0, 0};  // position of K inside the patch
  std::array<bool, 4> on_boundary{};  // lo x, hi x, lo y, hi y touch the domain boundary
  int k = 0;

  auto operator<=>(const PatchShape&) const = default;
};

PatchShape patch_shape(const GridHierarchy& grid, const Patch& patch);

/// Local index arithmetic on a patch: fine nodes, fine elements, coarse
/// nodes and coarse elements of the box in patch-local lexicographic order.
struct PatchFrame {
  int dim = 2;
  int r = 1;       // refinement
  double h = 1.0;  // fine width
  PatchShape shape;
  Coord fine_nodes{1, 1};     // per axis
  Coord fine_elements{1, 1};  // per axis
  Coord coarse_nodes{1, 1};   // per axis

  PatchFrame(const GridHierarchy& grid, const PatchShape& shape);

  std::size_t num_fine_nodes() const { return static_cast<std::size_t>(fine_nodes[0]) * fine_nodes[1]; }
  std::size_t num_fine_elements() const { return static_cast<std::size_t>(fine_elements[0]) * fine_elements[1]; }
  std::size_t num_coarse_nodes() const { return static_cast<std::size_t>(coarse_nodes[0]) * coarse_nodes[1]; }
  std::size_t num_coarse_elements() const {
    return static_cast<std::size_t>(shape.extent[0]) * shape.extent[1];
  }

  std::size_t fine_node(int x, int y) const { return static_cast<std::size_t>(x) + static_cast<std::size_t>(y) * fine_nodes[0]; }
  std::size_t coarse_node(int x, int y) const {
    return static_cast<std::size_t>(x) + static_cast<std::size_t>(y) * coarse_nodes[0];
  }
  /// Local node ids of the corners of local fine element e.
  std::array<std::size_t, 4> fine_element_nodes(std::size_t e) const;
  /// Local coarse element (patch-local lexicographic) containing local fine element e.
  std::size_t fine_to_coarse_element(std::size_t e) const;
  /// Local coarse node ids of the corners of local coarse element c.
  std::array<std::size_t, 4> coarse_element_nodes(std::size_t c) const;
  /// Local coarse element index of the center element K.
  std::size_t center_element() const;
  bool fine_node_free(int x, int y) const;
  bool coarse_node_free(int x, int y) const;
};

/// Correctors of the 2^d shape functions of one element, computed for one
/// coefficient on one patch shape. Immutable once built.
class LocalCorrector {
 public:
  LocalCorrector(const GridHierarchy& grid, const PatchShape& shape, std::vector<double> coefficient,
                 DenseMatrix corrections, double kernel_residual);

  const PatchFrame& frame() const noexcept { return frame_; }
  const PatchShape& shape() const noexcept { return frame_.shape; }

  /// Patch fine nodes x 2^d; column j is Q lambda_j (zero off the free nodes).
  const DenseMatrix& corrections() const noexcept { return corrections_; }
  /// Coefficient on the patch fine elements the corrector was computed from.
  const std::vector<double>& coefficient() const noexcept { return coefficient_; }
  double coefficient_average() const noexcept { return average_; }
  std::uint64_t coefficient_hash() const noexcept { return hash_; }

  /// Patch coarse nodes x 2^d:  int_U a grad(lambda_i) . grad(chi_K lambda_j - Q lambda_j).
  const DenseMatrix& stiffness_contribution() const noexcept { return stiffness_; }
  /// Patch coarse nodes x 2^d:  int_U lambda_i (chi_K lambda_j - Q lambda_j).
  const DenseMatrix& mass_contribution() const noexcept { return mass_; }

  /// max_j ||I_H Q lambda_j||_inf.
  double kernel_residual() const noexcept { return kernel_residual_; }

  /// Per patch coarse element K': the largest Rayleigh quotient of the
  /// indicator (see indicator.hpp). Computed on first use.
  const std::vector<double>& indicator_gammas() const;

 private:
  PatchFrame frame_;
  std::vector<double> coefficient_;
  double average_ = 0.0;
  std::uint64_t hash_ = 0;
  DenseMatrix corrections_;
  DenseMatrix stiffness_;
  DenseMatrix mass_;
  double kernel_residual_ = 0.0;

  mutable std::once_flag gamma_once_;
  mutable std::vector<double> gammas_;
};

struct Corrector {
  std::size_t element = 0;  // K
  int k = 0;
  double lagged_time = 0.0;
  std::shared_ptr<const LocalCorrector> local;

  const DenseMatrix& basis_corrections() const { return local->corrections(); }
  const std::vector<double>& lagged_coefficient() const { return local->coefficient(); }
};

/// Assembles and solves local corrector problems; memoizes by patch shape and
/// exact coefficient values. Optionally persists to / loads from a cache
/// directory. Thread-safe.
class CorrectorFactory {
 public:
  explicit CorrectorFactory(const GridHierarchy& grid, std::optional<std::filesystem::path> cache_dir = {});

  Corrector compute(std::size_t element, int k, const CoefficientSnapshot& snapshot);
  Corrector compute(const Patch& patch, std::span<const double> patch_coefficient, double time);

  /// Drops memoized correctors that nobody else references.
  void prune();

  std::size_t solves() const noexcept { return solves_; }
  std::size_t memo_hits() const noexcept { return hits_; }
  const GridHierarchy& grid() const noexcept { return grid_; }

 private:
  std::shared_ptr<const LocalCorrector> solve_local(const Patch& patch, const PatchShape& shape,
                                                    std::vector<double> coefficient);

  const GridHierarchy& grid_;
  std::optional<std::filesystem::path> cache_dir_;
  DenseMatrix local_interp_;  // 2^d x (r+1)^d
  std::mutex mutex_;
  std::map<std::pair<PatchShape, std::uint64_t>, std::vector<std::shared_ptr<const LocalCorrector>>> memo_;
  std::size_t solves_ = 0;
  std::size_t hits_ = 0;
};

/// Solves one local corrector problem from scratch (no memo, no cache).
std::shared_ptr<const LocalCorrector> compute_local_corrector(const GridHierarchy& grid, const Patch& patch,
                                                              std::span<const double> patch_coefficient);

/// Convenience: Corrector for element K at radius k from a full snapshot.
Corrector compute_corrector(const GridHierarchy& grid, std::size_t element, int k,
                            const CoefficientSnapshot& snapshot);

enum class MassMode { PetrovGalerkin, Standard };

struct ElementContribution {
  std::shared_ptr<const LocalCorrector> corrector;
  double scale = 1.0;  // multiplies the stiffness contribution
};

struct LodOperators {
  double time = 0.0;
  MassMode mass_mode = MassMode::PetrovGalerkin;
  SparseMatrix mass;       // coarse free x coarse free
  SparseMatrix stiffness;  // coarse free x coarse free
  std::vector<ElementContribution> contributions;  // per coarse element
};

/// Petrov-Galerkin matrices
///   A_ij = sum_K s_K int_U a_K grad(lambda_i) . grad(chi_K lambda_j - Q_K lambda_j)
///   M_ij = sum_K       int_U lambda_i (chi_K lambda_j - Q_K lambda_j)     (PG mode)
/// with a_K the coefficient stored in K's corrector. `scales` defaults to 1.
/// Standard mass mode uses the plain coarse mass matrix.
LodOperators assemble_pg(const GridHierarchy& grid, std::span<const Corrector> correctors, MassMode mass_mode,
                         double time, std::span<const double> scales = {});

/// Fine free-node representation  P z - sum_K sum_j z_{K,j} Q_K lambda_j.
Vector prolong_lod_solution(const GridHierarchy& grid, std::span<const Corrector> correctors, const Vector& z);

// --- on-disk corrector cache ---------------------------------------------
//
// Little-endian binary file:
//   char[8]  "LODCORR1"
//   u32      dim, coarse_exp, fine_exp, k
//   u64      element K
//   u64      coefficient hash (FNV-1a over the patch coefficient bits)
//   f64      lagged time
//   u64      number of patch fine elements, then that many f64 coefficient values
//   u64      rows (patch fine nodes), u64 cols (2^d), then rows*cols f64, column-major
//   f64      kernel residual

struct CorrectorFileHeader {
  std::uint32_t dim = 0, coarse_exp = 0, fine_exp = 0, k = 0;
  std::uint64_t element = 0;
  std::uint64_t hash = 0;
  double lagged_time = 0.0;
};

void write_corrector_file(const std::filesystem::path& path, const GridHierarchy& grid, const Corrector& corrector);
/// Throws ConfigError if the file is malformed or belongs to a different grid.
Corrector read_corrector_file(const std::filesystem::path& path, const GridHierarchy& grid);
std::filesystem::path corrector_file_name(const GridHierarchy& grid, std::size_t element, int k, std::uint64_t hash);

}  // namespace lod

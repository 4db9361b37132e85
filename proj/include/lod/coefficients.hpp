#pragma once

// Time-dependent multiscale coefficients and right-hand sides used by the
// experiments, and their sampling onto fine elements.

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lod/grid.hpp"

namespace lod {

enum class CoefficientId {
  PeriodicProduct,    // (3 + sin(2 pi x1/eps) + sin(2 pi t)) (3 + sin(2 pi x2/eps) + sin(2 pi t))
  Disc,               // a_disc: 10 on the periodic inclusions, 1 elsewhere (time-independent)
  A1Tensor,           // (1 + 0.5 cos 9t) a_disc
  A2LocalModulation,  // (1 + 0.5 cos 9t) a_disc on [0.25,0.75]^2, a_disc elsewhere
  A3Additive,         // a_disc + 1 + 0.5 cos 9t
  Constant,           // a == value
  Custom,             // piecewise-constant-in-time snapshots loaded from text files
};

struct CustomSnapshot {
  double time = 0.0;
  int dim = 2;
  int n = 0;  // fine elements per axis
  std::vector<double> values;
};

struct CoefficientSpec {
  CoefficientId id = CoefficientId::PeriodicProduct;
  double epsilon = 1.0 / 32.0;
  double value = 1.0;  // Constant only
  std::shared_ptr<const std::vector<CustomSnapshot>> custom;  // Custom only, sorted by time

  /// Pointwise formula value. Periodic arguments are reduced to the unit
  /// cell before evaluation so that equal cell positions give bitwise-equal
  /// values.
  double evaluate(double t, std::array<double, 2> x, int dim) const;

  /// Declared bounds [c_a, C_a] over all t, x.
  std::array<double, 2> bounds() const;

  bool time_dependent() const noexcept { return id != CoefficientId::Disc && id != CoefficientId::Constant; }

  std::string name() const;
};

CoefficientId parse_coefficient_id(const std::string& name);

struct CoefficientSnapshot {
  double time = 0.0;
  std::vector<double> values;  // one per fine element, lexicographic
  std::uint64_t hash = 0;
};

std::uint64_t hash_values(std::span<const double> values);

/// Midpoint sampling on the fine elements. Builtin periodic formulas
/// require h <= eps/4 (throws ConfigError otherwise).
CoefficientSnapshot sample(const CoefficientSpec& spec, double t, const GridHierarchy& grid);

/// Snapshot from explicit values (validated positive).
CoefficientSnapshot make_snapshot(double t, std::vector<double> values);

/// Mean of the snapshot over the patch's fine elements.
double patch_average(const CoefficientSnapshot& snapshot, const Patch& patch);

/// Snapshot values on the patch fine elements (patch-local order).
std::vector<double> restrict_to_patch(const CoefficientSnapshot& snapshot, const Patch& patch);

/// Patch values divided by the patch average.
std::vector<double> scaled_restriction(const CoefficientSnapshot& snapshot, const Patch& patch);
std::vector<double> scaled_restriction(std::span<const double> patch_values);

// --- right-hand sides ------------------------------------------------------

enum class RhsId { F1Discontinuous, F2Smooth, FSine, Zero };

struct RhsSpec {
  RhsId id = RhsId::Zero;
  double evaluate(double t, std::array<double, 2> x, int dim) const;
  std::string name() const;
};

RhsId parse_rhs_id(const std::string& name);

// --- custom coefficient files ---------------------------------------------
//
// Text format, one file per sampled time:
//
//   # lod-coefficient v1
//   dim 2
//   n 128
//   t 0.25
//   <n^d values, one per line, fine elements in lexicographic order>

CustomSnapshot read_coefficient_file(const std::filesystem::path& path);
void write_coefficient_file(const std::filesystem::path& path, const CustomSnapshot& snapshot);

/// Custom spec from a set of files; snapshot at time t is the one with the
/// largest stamp <= t.
CoefficientSpec load_custom_coefficient(const std::vector<std::filesystem::path>& files);

}  // namespace lod

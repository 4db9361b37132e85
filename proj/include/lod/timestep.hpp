#pragma once

// Backward Euler and implicit midpoint for the first-order system
//   u' = v,   M v' = F - A u,
// applied to the Petrov-Galerkin LOD matrices and to the fine reference
// Galerkin system, plus the adaptive corrector-update loop.
//
// Both schemes use the Schur-reduced form of a step of size theta:
//   (M + theta^2 A) v' = M v + theta (F - A u),   u' = u + theta v'.
// Backward Euler takes theta = tau with matrices at t_{n+1}; the midpoint
// rule takes theta = tau/2 at t_{n+1/2} and extrapolates z' = 2 z_half - z.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "lod/coefficients.hpp"
#include "lod/correctors.hpp"
#include "lod/fem.hpp"
#include "lod/grid.hpp"
#include "lod/indicator.hpp"
#include "lod/sparse_linalg.hpp"

namespace lod {

enum class Scheme { BackwardEuler, ImplicitMidpoint };
enum class UpdateMode { All, Adaptive, Frozen };

/// How an element whose corrector is reused enters the stiffness matrix:
/// Rescaled multiplies the stored contribution by the ratio of the current
/// to the stored patch average; Literal uses the stored coefficient as is.
enum class LaggedMode { Rescaled, Literal };

struct TimeGrid {
  double tau = 0.0;
  std::size_t steps = 0;
  double T = 0.0;
  Scheme scheme = Scheme::ImplicitMidpoint;

  /// tau must divide T (up to 1e-9 relative); throws ConfigError otherwise.
  static TimeGrid make(double T, double tau, Scheme scheme);

  /// Time at which step n (from t_n to t_{n+1}) evaluates its matrices and load.
  double matrix_time(std::size_t n) const;
};

struct SolverState {
  std::size_t step = 0;
  Vector u, v;
  std::size_t corrector_updates = 0;  // recomputed correctors after the first assembly
};

struct FineTrajectory {
  std::vector<double> times;
  std::vector<Vector> u, v;  // fine free nodes

  const Vector& final_u() const { return u.back(); }
  const Vector& final_v() const { return v.back(); }
};

/// z_u = I_H u0, z_v = I_H v0.
SolverState initial_state(const Vector& u0, const Vector& v0, const InterpolationOperator& ih);

/// Factorization of M + theta^2 A for repeated steps with the same matrices.
class SchurStepper {
 public:
  SchurStepper(const SparseMatrix& mass, const SparseMatrix& stiffness, double theta, Symmetry symmetry);

  /// One reduced step of size theta: returns (u', v').
  std::pair<Vector, Vector> advance(const Vector& u, const Vector& v, const Vector& load) const;

 private:
  SparseMatrix mass_, stiffness_;
  double theta_;
  SparseSolver solver_;
};

SolverState be_step(const SolverState& state, const SparseMatrix& mass, const SparseMatrix& stiffness,
                    const Vector& load, double tau, Symmetry symmetry = Symmetry::General);
SolverState mp_step(const SolverState& state, const SparseMatrix& mass, const SparseMatrix& stiffness,
                    const Vector& load, double tau, Symmetry symmetry = Symmetry::General);
SolverState be_step(const SolverState& state, const LodOperators& ops, const Vector& load, double tau);
SolverState mp_step(const SolverState& state, const LodOperators& ops, const Vector& load, double tau);

/// Applies one step of `scheme` using a prepared stepper (theta must match).
SolverState step_with(const SolverState& state, const SchurStepper& stepper, const Vector& load, Scheme scheme);

/// Stepper size for a scheme: tau (BE) or tau/2 (MP).
double stepper_theta(Scheme scheme, double tau);

/// u^T A u + v^T M v.
double discrete_energy(const SparseMatrix& mass, const SparseMatrix& stiffness, const Vector& u, const Vector& v);

/// Load vectors (f(t), phi_i) over free nodes. The fine mass rows and the
/// prolongation are built once.
class LoadAssembler {
 public:
  LoadAssembler(const GridHierarchy& grid, const RhsSpec& rhs);
  Vector fine(double t) const;
  Vector coarse(double t) const;
  bool zero() const noexcept { return rhs_.id == RhsId::Zero; }

 private:
  const GridHierarchy& grid_;
  RhsSpec rhs_;
  SparseMatrix mass_rows_;  // fine free x all fine nodes
  SparseMatrix prolongation_t_;
};

struct LodSettings {
  int k = 1;
  Scheme scheme = Scheme::ImplicitMidpoint;
  double tau = 1.0 / 128.0;
  double T = 1.0;
  UpdateMode update = UpdateMode::All;
  double zeta = 0.5;
  MassMode mass_mode = MassMode::PetrovGalerkin;
  LaggedMode lagged = LaggedMode::Rescaled;
  /// Largest E_K at or below which nothing is marked (the values are rounding noise).
  double indicator_floor = 1e-12;
  bool record_indicators = true;
  bool record_trajectory = false;
  std::optional<std::filesystem::path> cache_dir;
};

struct LodRunResult {
  SolverState final_state;
  std::vector<IndicatorReport> indicators;  // one per step after the first (adaptive mode)
  std::vector<Vector> trajectory_u, trajectory_v;  // coarse, if recorded (initial state first)
  std::vector<Corrector> correctors;  // in use at T
  Vector fine_u, fine_v;  // LOD solution at T on the fine free nodes
  std::size_t local_solves = 0;
  std::size_t recomputations = 0;  // after the first assembly
  std::size_t final_recomputations = 0;  // refresh at T before the fine reconstruction
  double mean_update_fraction = 0.0;
  std::vector<double> update_fractions;  // per step after the first
  double max_tol = 0.0;
};

/// Homogeneous initial data; runs the LOD scheme to T.
LodRunResult run_lod(const GridHierarchy& grid, const CoefficientSpec& coefficient, const RhsSpec& rhs,
                     const LodSettings& settings);

/// Linear solver for M + theta^2 A on the fine grid. Iterative is
/// preconditioned CG (falls back to LDL^T when it stalls).
enum class ReferenceSolver { Iterative, Direct };

struct ReferenceSettings {
  Scheme scheme = Scheme::ImplicitMidpoint;
  ReferenceSolver solver = ReferenceSolver::Iterative;
  double tau = 1.0 / 128.0;
  double T = 1.0;
  bool record_all = false;
};

/// Fine Galerkin reference with homogeneous initial data (or the given
/// fine free-node initial data). Reuses the factorization while the sampled
/// coefficient hash is unchanged.
FineTrajectory run_reference(const GridHierarchy& grid, const CoefficientSpec& coefficient, const RhsSpec& rhs,
                             const ReferenceSettings& settings, const Vector* u0 = nullptr,
                             const Vector* v0 = nullptr);

}  // namespace lod

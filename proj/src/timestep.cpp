#include "lod/timestep.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lod/errors.hpp"

namespace lod {

TimeGrid TimeGrid::make(double T, double tau, Scheme scheme) {
  if (!(tau > 0.0)) throw ConfigError("time step must be positive");
  if (!(T > 0.0)) throw ConfigError("final time must be positive");
  const double n = std::round(T / tau);
  if (n < 1.0 || std::abs(n * tau - T) > 1e-9 * T)
    throw ConfigError("time step " + std::to_string(tau) + " does not divide T = " + std::to_string(T));
  TimeGrid g;
  g.tau = tau;
  g.steps = static_cast<std::size_t>(n);
  g.T = T;
  g.scheme = scheme;
  return g;
}

double TimeGrid::matrix_time(std::size_t n) const {
  const double offset = scheme == Scheme::BackwardEuler ? 1.0 : 0.5;
  return (static_cast<double>(n) + offset) * tau;
}

SolverState initial_state(const Vector& u0, const Vector& v0, const InterpolationOperator& ih) {
  if (u0.size() != ih.matrix.cols() || v0.size() != ih.matrix.cols())
    throw ConfigError("initial_state: initial data does not match the fine free nodes");
  SolverState s;
  s.u = ih.matrix * u0;
  s.v = ih.matrix * v0;
  return s;
}

SchurStepper::SchurStepper(const SparseMatrix& mass, const SparseMatrix& stiffness, double theta, Symmetry symmetry)
    : mass_(mass), stiffness_(stiffness), theta_(theta), solver_(SparseMatrix(mass + (theta * theta) * stiffness),
                                                                  symmetry) {}

std::pair<Vector, Vector> SchurStepper::advance(const Vector& u, const Vector& v, const Vector& load) const {
  const Vector rhs = mass_ * v + theta_ * (load - stiffness_ * u);
  Vector v1 = solver_.solve(rhs);
  Vector u1 = u + theta_ * v1;
  return {std::move(u1), std::move(v1)};
}

double stepper_theta(Scheme scheme, double tau) { return scheme == Scheme::BackwardEuler ? tau : 0.5 * tau; }

SolverState step_with(const SolverState& state, const SchurStepper& stepper, const Vector& load, Scheme scheme) {
  auto [u1, v1] = stepper.advance(state.u, state.v, load);
  SolverState next = state;
  ++next.step;
  if (scheme == Scheme::BackwardEuler) {
    next.u = std::move(u1);
    next.v = std::move(v1);
  } else {
    next.u = 2.0 * u1 - state.u;
    next.v = 2.0 * v1 - state.v;
  }
  return next;
}

namespace {

void check_sizes(const SolverState& s, const SparseMatrix& m, const SparseMatrix& a, const Vector& f) {
  const auto n = m.rows();
  if (m.cols() != n || a.rows() != n || a.cols() != n || s.u.size() != n || s.v.size() != n || f.size() != n)
    throw ConfigError("time step: state, matrices and load have inconsistent sizes");
}

}  // namespace

SolverState be_step(const SolverState& state, const SparseMatrix& mass, const SparseMatrix& stiffness,
                    const Vector& load, double tau, Symmetry symmetry) {
  check_sizes(state, mass, stiffness, load);
  const SchurStepper stepper(mass, stiffness, tau, symmetry);
  return step_with(state, stepper, load, Scheme::BackwardEuler);
}

SolverState mp_step(const SolverState& state, const SparseMatrix& mass, const SparseMatrix& stiffness,
                    const Vector& load, double tau, Symmetry symmetry) {
  check_sizes(state, mass, stiffness, load);
  const SchurStepper stepper(mass, stiffness, 0.5 * tau, symmetry);
  return step_with(state, stepper, load, Scheme::ImplicitMidpoint);
}

SolverState be_step(const SolverState& state, const LodOperators& ops, const Vector& load, double tau) {
  return be_step(state, ops.mass, ops.stiffness, load, tau, Symmetry::General);
}

SolverState mp_step(const SolverState& state, const LodOperators& ops, const Vector& load, double tau) {
  return mp_step(state, ops.mass, ops.stiffness, load, tau, Symmetry::General);
}

double discrete_energy(const SparseMatrix& mass, const SparseMatrix& stiffness, const Vector& u, const Vector& v) {
  return u.dot(stiffness * u) + v.dot(mass * v);
}

LoadAssembler::LoadAssembler(const GridHierarchy& grid, const RhsSpec& rhs)
    : grid_(grid),
      rhs_(rhs),
      mass_rows_(restrict_rows_to_free(grid, Level::Fine, assemble_mass_full(grid, Level::Fine))),
      prolongation_t_(prolongation(grid).transpose()) {}

Vector LoadAssembler::fine(double t) const {
  if (zero()) return Vector::Zero(mass_rows_.rows());
  const int dim = grid_.dim();
  const RhsSpec rhs = rhs_;
  const Vector nodal = fine_nodal_values(
      grid_, [rhs, dim](double tt, std::array<double, 2> x) { return rhs.evaluate(tt, x, dim); }, t);
  return mass_rows_ * nodal;
}

Vector LoadAssembler::coarse(double t) const { return prolongation_t_ * fine(t); }

// --- LOD run ----------------------------------------------------------------------

LodRunResult run_lod(const GridHierarchy& grid, const CoefficientSpec& coefficient, const RhsSpec& rhs,
                     const LodSettings& settings) {
  if (settings.k < 1) throw ConfigError("patch radius k must be >= 1");
  if (!(settings.zeta >= 0.0 && settings.zeta <= 1.0)) throw ConfigError("zeta must lie in [0, 1]");
  const TimeGrid tg = TimeGrid::make(settings.T, settings.tau, settings.scheme);
  const std::size_t ne = grid.num_elements(Level::Coarse);

  CorrectorFactory factory(grid, settings.cache_dir);
  std::vector<Patch> patches;
  patches.reserve(ne);
  for (std::size_t K = 0; K < ne; ++K) patches.push_back(make_patch(grid, K, settings.k));
  const LoadAssembler loads(grid, rhs);

  LodRunResult result;
  {
    const InterpolationOperator ih = quasi_interpolation(grid);
    const auto nf = static_cast<Eigen::Index>(grid.num_free_nodes(Level::Fine));
    result.final_state = initial_state(Vector::Zero(nf), Vector::Zero(nf), ih);
  }
  if (settings.record_trajectory) {
    result.trajectory_u.push_back(result.final_state.u);
    result.trajectory_v.push_back(result.final_state.v);
  }

  std::vector<Corrector> correctors(ne);
  std::vector<double> scales(ne, 1.0);
  std::optional<SchurStepper> stepper;
  const double theta = stepper_theta(settings.scheme, tg.tau);
  const bool static_coefficient = !coefficient.time_dependent();

  // Brings the correctors to time t following the update mode; returns the
  // number of recomputed correctors.
  auto refresh = [&](double t, bool first, std::size_t step) {
    const CoefficientSnapshot snap = sample(coefficient, t, grid);
    std::vector<char> recompute(ne, 0);
    if (first || settings.update == UpdateMode::All) {
      std::fill(recompute.begin(), recompute.end(), 1);
    } else if (settings.update == UpdateMode::Adaptive) {
      std::vector<double> values(ne);
      for (std::size_t K = 0; K < ne; ++K)
        values[K] = error_indicator(correctors[K], restrict_to_patch(snap, patches[K]));
      IndicatorReport report = make_report(step, t, std::move(values), settings.zeta);
      const double vmax = *std::max_element(report.values.begin(), report.values.end());
      if (vmax <= settings.indicator_floor) {
        report.marked.clear();
        report.update_fraction = 0.0;
      }
      for (std::size_t K : report.marked) recompute[K] = 1;
      if (step < tg.steps) {
        result.max_tol = std::max(result.max_tol, report.tol);
        if (settings.record_indicators) result.indicators.push_back(std::move(report));
      }
    }
    std::size_t count = 0;
    for (std::size_t K = 0; K < ne; ++K) {
      if (!recompute[K]) continue;
      ++count;
      correctors[K] = factory.compute(patches[K], restrict_to_patch(snap, patches[K]), t);
    }
    for (std::size_t K = 0; K < ne; ++K)
      scales[K] = settings.lagged == LaggedMode::Rescaled && !recompute[K]
                      ? patch_average(snap, patches[K]) / correctors[K].local->coefficient_average()
                      : 1.0;
    return count;
  };

  for (std::size_t n = 0; n < tg.steps; ++n) {
    const double t = tg.matrix_time(n);
    const bool reuse = n > 0 && static_coefficient && stepper.has_value();
    if (!reuse) {
      const std::size_t count = refresh(t, n == 0, n);
      if (n > 0) {
        result.recomputations += count;
        result.update_fractions.push_back(static_cast<double>(count) / static_cast<double>(ne));
      }
      const LodOperators ops = assemble_pg(grid, correctors, settings.mass_mode, t, scales);
      stepper.emplace(ops.mass, ops.stiffness, theta, Symmetry::General);
      factory.prune();
    } else {
      result.update_fractions.push_back(settings.update == UpdateMode::All ? 1.0 : 0.0);
      if (settings.update == UpdateMode::All) result.recomputations += ne;
    }

    result.final_state = step_with(result.final_state, *stepper, loads.coarse(t), settings.scheme);
    if (settings.record_trajectory) {
      result.trajectory_u.push_back(result.final_state.u);
      result.trajectory_v.push_back(result.final_state.v);
    }
  }

  // The midpoint rule's last matrix time is T - tau/2; the fine-scale
  // reconstruction needs correctors of the coefficient at T.
  if (!static_coefficient && tg.matrix_time(tg.steps - 1) != tg.T)
    result.final_recomputations = refresh(tg.T, false, tg.steps);

  result.final_state.corrector_updates = result.recomputations;
  result.local_solves = factory.solves();
  if (result.update_fractions.empty()) {
    result.mean_update_fraction = settings.update == UpdateMode::All ? 1.0 : 0.0;
  } else {
    double s = 0.0;
    for (double f : result.update_fractions) s += f;
    result.mean_update_fraction = s / static_cast<double>(result.update_fractions.size());
  }
  result.fine_u = prolong_lod_solution(grid, correctors, result.final_state.u);
  result.fine_v = prolong_lod_solution(grid, correctors, result.final_state.v);
  result.correctors = std::move(correctors);
  return result;
}

// --- fine reference -----------------------------------------------------------------

namespace {

Symmetry reference_symmetry(const ReferenceSettings& s) {
  return s.solver == ReferenceSolver::Direct ? Symmetry::Symmetric : Symmetry::SpdIterative;
}

}  // namespace

FineTrajectory run_reference(const GridHierarchy& grid, const CoefficientSpec& coefficient, const RhsSpec& rhs,
                             const ReferenceSettings& settings, const Vector* u0, const Vector* v0) {
  const TimeGrid tg = TimeGrid::make(settings.T, settings.tau, settings.scheme);
  const auto nf = static_cast<Eigen::Index>(grid.num_free_nodes(Level::Fine));
  SolverState state;
  state.u = u0 ? *u0 : Vector::Zero(nf);
  state.v = v0 ? *v0 : Vector::Zero(nf);
  if (state.u.size() != nf || state.v.size() != nf)
    throw ConfigError("run_reference: initial data does not match the fine free nodes");

  const SparseMatrix mass = assemble_mass(grid, Level::Fine).matrix;
  const LoadAssembler loads(grid, rhs);
  const double theta = stepper_theta(settings.scheme, tg.tau);

  FineTrajectory traj;
  auto record = [&](double time) {
    traj.times.push_back(time);
    traj.u.push_back(state.u);
    traj.v.push_back(state.v);
  };
  if (settings.record_all) record(0.0);

  std::optional<SchurStepper> stepper;
  std::uint64_t hash = 0;
  for (std::size_t n = 0; n < tg.steps; ++n) {
    const double t = tg.matrix_time(n);
    if (!stepper || coefficient.time_dependent()) {
      const CoefficientSnapshot snap = sample(coefficient, t, grid);
      if (!stepper || snap.hash != hash) {
        const SparseMatrix stiffness = assemble_stiffness(grid, Level::Fine, snap.values, snap.hash).matrix;
        stepper.emplace(mass, stiffness, theta, reference_symmetry(settings));
        hash = snap.hash;
      }
    }
    const Vector load = loads.zero() ? Vector::Zero(nf) : loads.fine(t);
    state = step_with(state, *stepper, load, settings.scheme);
    if (settings.record_all) record(static_cast<double>(n + 1) * tg.tau);
  }
  if (!settings.record_all) record(tg.T);
  return traj;
}

}  // namespace lod

#pragma once

// Experiment drivers: single runs against the fine reference, spatial and
// temporal convergence sweeps, tolerance-factor sweeps, and CSV output.

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lod/config.hpp"
#include "lod/grid.hpp"
#include "lod/sparse_linalg.hpp"
#include "lod/timestep.hpp"

namespace lod {

/// sqrt(|e_u|_S^2 + |e_v|_M^2) / sqrt(|u_ref|_S^2 + |v_ref|_M^2).
/// Throws NumericalError if the reference norm vanishes.
double relative_energy_error(const Vector& u, const Vector& v, const Vector& u_ref, const Vector& v_ref,
                             const SparseMatrix& stiffness, const SparseMatrix& mass);

/// Fine free-node matrices defining the energy norm of a config:
/// unit-coefficient stiffness (or the coefficient at T when weighted) and mass.
std::pair<SparseMatrix, SparseMatrix> energy_matrices(const RunConfig& config, const GridHierarchy& grid);

/// log(e_{i-1}/e_i) / log(x_{i-1}/x_i) from row 2 on; first entry empty.
std::vector<std::optional<double>> observed_rates(std::span<const double> xs, std::span<const double> errors);

/// Least-squares slope of log2(error) against log2(x).
double least_squares_slope(std::span<const double> xs, std::span<const double> errors);

struct ErrorRow {
  std::string sweep;  // space, time, zeta or single
  double value = 0.0;  // H, tau or zeta
  double error = 0.0;
  std::optional<double> rate;
  double mean_update_fraction = 0.0;
  double max_tol = 0.0;
  std::size_t recomputations = 0;
  std::size_t local_solves = 0;
  double max_indicator = 0.0;
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
  std::vector<double> values() const;
  std::vector<double> errors() const;
};

LodSettings lod_settings(const RunConfig& config);
ReferenceSettings reference_settings(const RunConfig& config);

/// Reference trajectory at T for a config (fine grid fine_exp, midpoint, tau_ref).
FineTrajectory compute_reference(const RunConfig& config, const GridHierarchy& grid);

/// One LOD run compared with the given reference.
ErrorRow evaluate_run(const RunConfig& config, const FineTrajectory& reference, const std::string& sweep,
                      double value, LodRunResult* result_out = nullptr);

enum class SweepMode { Space, Time };

/// CSV header `sweep,value,rel_energy_error,rate,mean_update_fraction`; rows
/// are written and flushed as they complete.
ErrorReport convergence_study(const RunConfig& config, SweepMode mode, std::ostream* csv = nullptr);

/// CSV header `sweep,value,rel_energy_error,max_tol,mean_update_fraction`.
ErrorReport adaptive_study(const RunConfig& config, std::span<const double> zetas, std::ostream* csv = nullptr);

void write_convergence_header(std::ostream& out);
void write_convergence_row(std::ostream& out, const ErrorRow& row);
void write_adaptive_header(std::ostream& out);
void write_adaptive_row(std::ostream& out, const ErrorRow& row);

/// %.17g formatting.
std::string format_double(double x);

}  // namespace lod

#include "lod/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lod/errors.hpp"
#include "lod/fem.hpp"

namespace lod {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double relative_energy_error(const Vector& u, const Vector& v, const Vector& u_ref, const Vector& v_ref,
                             const SparseMatrix& stiffness, const SparseMatrix& mass) {
  const auto n = stiffness.rows();
  if (u.size() != n || v.size() != n || u_ref.size() != n || v_ref.size() != n || mass.rows() != n)
    throw ConfigError("relative_energy_error: vectors and matrices live on different grids");
  const Vector eu = u - u_ref, ev = v - v_ref;
  const double num = eu.dot(stiffness * eu) + ev.dot(mass * ev);
  const double den = u_ref.dot(stiffness * u_ref) + v_ref.dot(mass * v_ref);
  if (!(den > 0.0)) throw NumericalError(NumericalError::Kind::Other, "relative_energy_error: reference norm is zero");
  return std::sqrt(std::max(num, 0.0) / den);
}

std::pair<SparseMatrix, SparseMatrix> energy_matrices(const RunConfig& config, const GridHierarchy& grid) {
  SparseMatrix s;
  if (config.energy_norm == EnergyNorm::Weighted) {
    const CoefficientSnapshot snap = sample(coefficient_spec(config), config.T, grid);
    s = assemble_stiffness(grid, Level::Fine, snap.values).matrix;
  } else {
    const std::vector<double> ones(grid.num_elements(Level::Fine), 1.0);
    s = assemble_stiffness(grid, Level::Fine, ones).matrix;
  }
  return {std::move(s), assemble_mass(grid, Level::Fine).matrix};
}

std::vector<std::optional<double>> observed_rates(std::span<const double> xs, std::span<const double> errors) {
  if (xs.size() != errors.size()) throw ConfigError("observed_rates: length mismatch");
  std::vector<std::optional<double>> out(xs.size());
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (errors[i - 1] > 0.0 && errors[i] > 0.0 && xs[i - 1] != xs[i])
      out[i] = std::log(errors[i - 1] / errors[i]) / std::log(xs[i - 1] / xs[i]);
  return out;
}

double least_squares_slope(std::span<const double> xs, std::span<const double> errors) {
  if (xs.size() != errors.size() || xs.size() < 2) throw ConfigError("least_squares_slope: need two or more points");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = std::log2(xs[i]), y = std::log2(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double d = n * sxx - sx * sx;
  if (d == 0.0) throw ConfigError("least_squares_slope: abscissae coincide");
  return (n * sxy - sx * sy) / d;
}

std::vector<double> ErrorReport::values() const {
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r.value);
  return out;
}

std::vector<double> ErrorReport::errors() const {
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r.error);
  return out;
}

LodSettings lod_settings(const RunConfig& c) {
  LodSettings s;
  s.k = c.k;
  s.scheme = c.scheme;
  s.tau = pow2(c.tau_exp);
  s.T = c.T;
  s.update = c.update_mode;
  s.zeta = c.zeta_tol;
  s.mass_mode = c.mass_mode;
  s.lagged = c.lagged_coefficient;
  if (!c.corrector_cache_dir.empty()) s.cache_dir = c.corrector_cache_dir;
  return s;
}

ReferenceSettings reference_settings(const RunConfig& c) {
  ReferenceSettings s;
  s.scheme = Scheme::ImplicitMidpoint;
  s.tau = pow2(c.tau_exp_ref);
  s.T = c.T;
  return s;
}

FineTrajectory compute_reference(const RunConfig& config, const GridHierarchy& grid) {
  return run_reference(grid, coefficient_spec(config), rhs_spec(config), reference_settings(config));
}

ErrorRow evaluate_run(const RunConfig& config, const FineTrajectory& reference, const std::string& sweep,
                      double value, LodRunResult* result_out) {
  validate(config);
  const GridHierarchy grid = GridHierarchy::build(config.coarse_exp, config.fine_exp, config.dim);
  LodRunResult res = run_lod(grid, coefficient_spec(config), rhs_spec(config), lod_settings(config));
  const auto [s, m] = energy_matrices(config, grid);
  ErrorRow row;
  row.sweep = sweep;
  row.value = value;
  row.error = relative_energy_error(res.fine_u, res.fine_v, reference.final_u(), reference.final_v(), s, m);
  row.mean_update_fraction = res.mean_update_fraction;
  row.max_tol = res.max_tol;
  row.recomputations = res.recomputations;
  row.local_solves = res.local_solves;
  for (const auto& rep : res.indicators)
    for (double e : rep.values) row.max_indicator = std::max(row.max_indicator, e);
  if (result_out) *result_out = std::move(res);
  return row;
}

void write_convergence_header(std::ostream& out) { out << "sweep,value,rel_energy_error,rate,mean_update_fraction\n"; }

void write_convergence_row(std::ostream& out, const ErrorRow& r) {
  out << r.sweep << ',' << format_double(r.value) << ',' << format_double(r.error) << ','
      << (r.rate ? format_double(*r.rate) : std::string()) << ',' << format_double(r.mean_update_fraction) << '\n';
  out.flush();
}

void write_adaptive_header(std::ostream& out) { out << "sweep,value,rel_energy_error,max_tol,mean_update_fraction\n"; }

void write_adaptive_row(std::ostream& out, const ErrorRow& r) {
  out << r.sweep << ',' << format_double(r.value) << ',' << format_double(r.error) << ',' << format_double(r.max_tol)
      << ',' << format_double(r.mean_update_fraction) << '\n';
  out.flush();
}

ErrorReport convergence_study(const RunConfig& config, SweepMode mode, std::ostream* csv) {
  validate(config);
  std::vector<RunConfig> runs;
  std::vector<double> values;
  if (mode == SweepMode::Space) {
    if (config.space_sweep.empty()) throw ConfigError("space sweep is empty");
    for (const auto& [ce, k] : config.space_sweep) {
      RunConfig c = config;
      c.coarse_exp = ce;
      c.k = k;
      runs.push_back(c);
      values.push_back(pow2(ce));
    }
  } else {
    if (config.time_sweep.empty()) throw ConfigError("time sweep is empty");
    for (int e : config.time_sweep) {
      RunConfig c = config;
      c.tau_exp = e;
      runs.push_back(c);
      values.push_back(pow2(e));
    }
  }
  const GridHierarchy ref_grid = GridHierarchy::build(config.coarse_exp, config.fine_exp, config.dim);
  const FineTrajectory reference = compute_reference(config, ref_grid);

  ErrorReport report;
  if (csv) write_convergence_header(*csv);
  const std::string name = mode == SweepMode::Space ? "space" : "time";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    ErrorRow row = evaluate_run(runs[i], reference, name, values[i]);
    if (i > 0) {
      const double xs[2] = {report.rows.back().value, row.value};
      const double es[2] = {report.rows.back().error, row.error};
      row.rate = observed_rates(xs, es)[1];
    }
    if (csv) write_convergence_row(*csv, row);
    report.rows.push_back(std::move(row));
  }
  return report;
}

ErrorReport adaptive_study(const RunConfig& config, std::span<const double> zetas, std::ostream* csv) {
  validate(config);
  if (zetas.empty()) throw ConfigError("zeta sweep is empty");
  const GridHierarchy grid = GridHierarchy::build(config.coarse_exp, config.fine_exp, config.dim);
  const FineTrajectory reference = compute_reference(config, grid);
  ErrorReport report;
  if (csv) write_adaptive_header(*csv);
  for (double z : zetas) {
    RunConfig c = config;
    c.update_mode = UpdateMode::Adaptive;
    c.zeta_tol = z;
    ErrorRow row = evaluate_run(c, reference, "zeta", z);
    if (csv) write_adaptive_row(*csv, row);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace lod

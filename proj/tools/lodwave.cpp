// lodwave: command-line driver for LOD wave-equation experiments.
//
//   lodwave solve      --preset fig1-desk [--out row.csv]
//   lodwave converge   --preset fig1-desk --mode space --out space.csv
//   lodwave adaptive   --preset fig3-desk --zeta 0,0.5,1 --out zeta.csv
//   lodwave indicators --preset fig3-desk --out indicators.csv
//
// Exit status: 0 success, 1 configuration or usage error, 2 numerical failure.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <memory>

#include "lod/config.hpp"
#include "lod/errors.hpp"
#include "lod/experiments.hpp"
#include "lod/indicator.hpp"

namespace {

struct Options {
  std::string config, preset, mode = "space", zeta, out, scheme, update, mass;
  long long seed = 0;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Config file with key = value lines");
  cmd->add_option("--preset", o.preset, "Named preset (applied before --config)");
  cmd->add_option("--mode", o.mode, "Sweep mode for converge")->check(CLI::IsMember({"space", "time"}));
  cmd->add_option("--zeta", o.zeta, "Comma-separated tolerance factors");
  cmd->add_option("--out", o.out, "Output CSV path (default: stdout)");
  cmd->add_option("--scheme", o.scheme, "Time stepping: be or mp")->check(CLI::IsMember({"be", "mp"}));
  cmd->add_option("--update", o.update, "Corrector updates: all, adaptive or frozen")
      ->check(CLI::IsMember({"all", "adaptive", "frozen"}));
  cmd->add_option("--mass", o.mass, "Mass matrix: pg or standard")->check(CLI::IsMember({"pg", "standard"}));
  cmd->add_option("--seed", o.seed, "Accepted for interface stability; runs are deterministic");
}

lod::RunConfig build_config(const Options& o) {
  lod::RunConfig c = o.preset.empty() ? lod::RunConfig{} : lod::preset(o.preset);
  if (!o.config.empty()) c = lod::load_config(o.config, c);
  if (!o.scheme.empty()) c.scheme = lod::parse_scheme(o.scheme);
  if (!o.update.empty()) c.update_mode = lod::parse_update_mode(o.update);
  if (!o.mass.empty()) c.mass_mode = lod::parse_mass_mode(o.mass);
  if (!o.out.empty()) c.out = o.out;
  if (!o.zeta.empty()) {
    c.zeta_sweep = lod::parse_double_list(o.zeta);
    c.zeta_tol = c.zeta_sweep.front();
  }
  lod::validate(c);
  return c;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw lod::ConfigError("cannot open output file " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int run_solve(const lod::RunConfig& c) {
  const auto grid = lod::GridHierarchy::build(c.coarse_exp, c.fine_exp, c.dim);
  const auto reference = lod::compute_reference(c, grid);
  const lod::ErrorRow row = lod::evaluate_run(c, reference, "single", lod::pow2(c.coarse_exp));
  std::cerr << "H = 2^-" << c.coarse_exp << ", k = " << c.k << ", tau = 2^-" << c.tau_exp
            << ": relative energy error " << lod::format_double(row.error) << ", mean update fraction "
            << lod::format_double(row.mean_update_fraction) << ", local corrector solves " << row.local_solves
            << "\n";
  Output out(c.out);
  lod::write_convergence_header(out.stream());
  lod::write_convergence_row(out.stream(), row);
  return 0;
}

int run_converge(const lod::RunConfig& c, const std::string& mode) {
  Output out(c.out);
  lod::convergence_study(c, mode == "time" ? lod::SweepMode::Time : lod::SweepMode::Space, &out.stream());
  return 0;
}

int run_adaptive(const lod::RunConfig& c) {
  std::vector<double> zetas = c.zeta_sweep.empty() ? std::vector<double>{c.zeta_tol} : c.zeta_sweep;
  Output out(c.out);
  lod::adaptive_study(c, zetas, &out.stream());
  return 0;
}

int run_indicators(lod::RunConfig c, bool update_given) {
  if (!update_given) c.update_mode = lod::UpdateMode::Adaptive;
  const auto grid = lod::GridHierarchy::build(c.coarse_exp, c.fine_exp, c.dim);
  lod::LodSettings s = lod::lod_settings(c);
  s.record_indicators = true;
  const lod::LodRunResult res = lod::run_lod(grid, lod::coefficient_spec(c), lod::rhs_spec(c), s);
  Output out(c.out.empty() ? c.indicator_out : c.out);
  lod::write_indicator_csv(out.stream(), res.indicators);
  std::cerr << "steps with indicators: " << res.indicators.size() << ", mean update fraction "
            << lod::format_double(res.mean_update_fraction) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LOD solver for the wave equation with time-dependent multiscale coefficients"};
  app.require_subcommand(1);
  Options o;
  CLI::App* solve = app.add_subcommand("solve", "Run one configuration and compare with the fine reference");
  CLI::App* converge = app.add_subcommand("converge", "Spatial or temporal convergence sweep");
  CLI::App* adaptive = app.add_subcommand("adaptive", "Tolerance-factor sweep of the adaptive update");
  CLI::App* indicators = app.add_subcommand("indicators", "Dump per-step error indicators");
  for (CLI::App* cmd : {solve, converge, adaptive, indicators}) add_common(cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 1;
  }

  try {
    const lod::RunConfig c = build_config(o);
    if (*solve) return run_solve(c);
    if (*converge) return run_converge(c, o.mode);
    if (*adaptive) return run_adaptive(c);
    if (*indicators) return run_indicators(c, !o.update.empty());
  } catch (const lod::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const lod::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

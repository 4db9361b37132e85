#pragma once

// Run configuration: flat `key = value` files, named presets, validation.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lod/coefficients.hpp"
#include "lod/correctors.hpp"
#include "lod/timestep.hpp"

namespace lod {

enum class EnergyNorm { Unweighted, Weighted };

struct RunConfig {
  int dim = 2;
  int coarse_exp = 3;  // H = 2^-coarse_exp
  int fine_exp = 7;    // h = 2^-fine_exp
  int k = 2;
  int tau_exp = 7;  // tau = 2^-tau_exp
  double T = 1.0;
  Scheme scheme = Scheme::ImplicitMidpoint;
  std::string coefficient = "periodic_product";
  double epsilon = 1.0 / 32.0;
  std::vector<std::string> coefficient_files;  // coefficient = custom
  std::string rhs = "f1_discontinuous";
  UpdateMode update_mode = UpdateMode::All;
  double zeta_tol = 0.5;
  MassMode mass_mode = MassMode::PetrovGalerkin;
  std::string out;
  int fine_exp_ref = 7;  // must equal fine_exp: errors are measured on one fine grid
  int tau_exp_ref = 7;   // reference always uses the midpoint rule
  EnergyNorm energy_norm = EnergyNorm::Unweighted;
  LaggedMode lagged_coefficient = LaggedMode::Rescaled;
  std::vector<std::pair<int, int>> space_sweep;  // (coarse_exp, k)
  std::vector<int> time_sweep;                   // tau_exp values
  std::vector<double> zeta_sweep;
  std::string corrector_cache_dir;
  std::string indicator_out;
};

/// Parses `key = value` lines ('#' starts a comment). Keys are the field
/// names above; lists are comma-separated, space_sweep entries are
/// `coarse_exp:k`. Unknown keys and malformed values throw ConfigError.
RunConfig parse_config(const std::string& text, const RunConfig& base = RunConfig{});
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base = RunConfig{});

/// Applies one `key = value` assignment.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Serializes back to the `key = value` format.
std::string format_config(const RunConfig& config);

/// Cross-field checks; throws ConfigError.
void validate(const RunConfig& config);

RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

CoefficientSpec coefficient_spec(const RunConfig& config);
RhsSpec rhs_spec(const RunConfig& config);

double pow2(int negative_exponent);  // 2^-e

Scheme parse_scheme(const std::string& s);
UpdateMode parse_update_mode(const std::string& s);
MassMode parse_mass_mode(const std::string& s);
std::vector<double> parse_double_list(const std::string& s);

}  // namespace lod

#include "lod/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lod/errors.hpp"

namespace lod {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  // Accept "2^-5" as a convenience for powers of two.
  if (v.rfind("2^", 0) == 0) return std::ldexp(1.0, parse_int(key, v.substr(2)));
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

std::string scheme_name(Scheme s) { return s == Scheme::BackwardEuler ? "be" : "mp"; }
std::string update_name(UpdateMode m) {
  switch (m) {
    case UpdateMode::All: return "all";
    case UpdateMode::Adaptive: return "adaptive";
    case UpdateMode::Frozen: return "frozen";
  }
  return "?";
}

}  // namespace

double pow2(int e) { return std::ldexp(1.0, -e); }

Scheme parse_scheme(const std::string& s) {
  if (s == "be" || s == "backward_euler") return Scheme::BackwardEuler;
  if (s == "mp" || s == "implicit_midpoint") return Scheme::ImplicitMidpoint;
  throw ConfigError("unknown scheme '" + s + "' (expected be or mp)");
}

UpdateMode parse_update_mode(const std::string& s) {
  if (s == "all") return UpdateMode::All;
  if (s == "adaptive") return UpdateMode::Adaptive;
  if (s == "frozen") return UpdateMode::Frozen;
  throw ConfigError("unknown update mode '" + s + "' (expected all, adaptive or frozen)");
}

MassMode parse_mass_mode(const std::string& s) {
  if (s == "pg") return MassMode::PetrovGalerkin;
  if (s == "standard") return MassMode::Standard;
  throw ConfigError("unknown mass mode '" + s + "' (expected pg or standard)");
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) out.push_back(parse_double("list", item));
  if (out.empty()) throw ConfigError("empty list '" + s + "'");
  return out;
}

void set_config_value(RunConfig& c, const std::string& key, const std::string& v) {
  if (key == "dim") c.dim = parse_int(key, v);
  else if (key == "coarse_exp") c.coarse_exp = parse_int(key, v);
  else if (key == "fine_exp") c.fine_exp = parse_int(key, v);
  else if (key == "k") c.k = parse_int(key, v);
  else if (key == "tau_exp") c.tau_exp = parse_int(key, v);
  else if (key == "T") c.T = parse_double(key, v);
  else if (key == "scheme") c.scheme = parse_scheme(v);
  else if (key == "coefficient") {
    parse_coefficient_id(v);
    c.coefficient = v;
  } else if (key == "epsilon") c.epsilon = parse_double(key, v);
  else if (key == "coefficient_files") c.coefficient_files = split(v, ',');
  else if (key == "rhs") {
    parse_rhs_id(v);
    c.rhs = v;
  } else if (key == "update_mode") c.update_mode = parse_update_mode(v);
  else if (key == "zeta_tol") c.zeta_tol = parse_double(key, v);
  else if (key == "mass_mode") c.mass_mode = parse_mass_mode(v);
  else if (key == "out") c.out = v;
  else if (key == "fine_exp_ref") c.fine_exp_ref = parse_int(key, v);
  else if (key == "tau_exp_ref") c.tau_exp_ref = parse_int(key, v);
  else if (key == "energy_norm") {
    if (v == "unweighted") c.energy_norm = EnergyNorm::Unweighted;
    else if (v == "weighted") c.energy_norm = EnergyNorm::Weighted;
    else throw ConfigError("config: energy_norm must be unweighted or weighted");
  } else if (key == "lagged_coefficient") {
    if (v == "rescaled") c.lagged_coefficient = LaggedMode::Rescaled;
    else if (v == "literal") c.lagged_coefficient = LaggedMode::Literal;
    else throw ConfigError("config: lagged_coefficient must be rescaled or literal");
  } else if (key == "space_sweep") {
    c.space_sweep.clear();
    for (const auto& item : split(v, ',')) {
      const auto parts = split(item, ':');
      if (parts.size() != 2) throw ConfigError("config: space_sweep entries are coarse_exp:k, got '" + item + "'");
      c.space_sweep.emplace_back(parse_int(key, parts[0]), parse_int(key, parts[1]));
    }
  } else if (key == "time_sweep") {
    c.time_sweep.clear();
    for (const auto& item : split(v, ',')) c.time_sweep.push_back(parse_int(key, item));
  } else if (key == "zeta_sweep") c.zeta_sweep = parse_double_list(v);
  else if (key == "corrector_cache_dir") c.corrector_cache_dir = v;
  else if (key == "indicator_out") c.indicator_out = v;
  else throw ConfigError("config: unknown key '" + key + "'");
}

RunConfig parse_config(const std::string& text, const RunConfig& base) {
  RunConfig c = base;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_config_value(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string format_config(const RunConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "dim = " << c.dim << "\n"
     << "coarse_exp = " << c.coarse_exp << "\n"
     << "fine_exp = " << c.fine_exp << "\n"
     << "k = " << c.k << "\n"
     << "tau_exp = " << c.tau_exp << "\n"
     << "T = " << c.T << "\n"
     << "scheme = " << scheme_name(c.scheme) << "\n"
     << "coefficient = " << c.coefficient << "\n"
     << "epsilon = " << c.epsilon << "\n";
  if (!c.coefficient_files.empty()) {
    os << "coefficient_files = ";
    for (std::size_t i = 0; i < c.coefficient_files.size(); ++i) os << (i ? "," : "") << c.coefficient_files[i];
    os << "\n";
  }
  os << "rhs = " << c.rhs << "\n"
     << "update_mode = " << update_name(c.update_mode) << "\n"
     << "zeta_tol = " << c.zeta_tol << "\n"
     << "mass_mode = " << (c.mass_mode == MassMode::PetrovGalerkin ? "pg" : "standard") << "\n";
  if (!c.out.empty()) os << "out = " << c.out << "\n";
  os << "fine_exp_ref = " << c.fine_exp_ref << "\n"
     << "tau_exp_ref = " << c.tau_exp_ref << "\n"
     << "energy_norm = " << (c.energy_norm == EnergyNorm::Unweighted ? "unweighted" : "weighted") << "\n"
     << "lagged_coefficient = " << (c.lagged_coefficient == LaggedMode::Rescaled ? "rescaled" : "literal") << "\n";
  if (!c.space_sweep.empty()) {
    os << "space_sweep = ";
    for (std::size_t i = 0; i < c.space_sweep.size(); ++i)
      os << (i ? "," : "") << c.space_sweep[i].first << ":" << c.space_sweep[i].second;
    os << "\n";
  }
  if (!c.time_sweep.empty()) {
    os << "time_sweep = ";
    for (std::size_t i = 0; i < c.time_sweep.size(); ++i) os << (i ? "," : "") << c.time_sweep[i];
    os << "\n";
  }
  if (!c.zeta_sweep.empty()) {
    os << "zeta_sweep = ";
    for (std::size_t i = 0; i < c.zeta_sweep.size(); ++i) os << (i ? "," : "") << c.zeta_sweep[i];
    os << "\n";
  }
  if (!c.corrector_cache_dir.empty()) os << "corrector_cache_dir = " << c.corrector_cache_dir << "\n";
  if (!c.indicator_out.empty()) os << "indicator_out = " << c.indicator_out << "\n";
  return os.str();
}

void validate(const RunConfig& c) {
  if (c.dim != 1 && c.dim != 2) throw ConfigError("dim must be 1 or 2");
  auto check_grid = [&](int coarse, int k, const std::string& what) {
    if (coarse < 1) throw ConfigError(what + ": coarse_exp must be >= 1");
    if (c.fine_exp <= coarse) throw ConfigError(what + ": fine_exp must exceed coarse_exp");
    if (k < 1) throw ConfigError(what + ": k must be >= 1");
  };
  check_grid(c.coarse_exp, c.k, "config");
  for (const auto& [ce, k] : c.space_sweep) check_grid(ce, k, "space_sweep");
  if (c.tau_exp < 0 || c.tau_exp_ref < 0) throw ConfigError("tau exponents must be >= 0");
  for (int e : c.time_sweep)
    if (e < 0) throw ConfigError("time_sweep exponents must be >= 0");
  if (!(c.T > 0.0)) throw ConfigError("T must be positive");
  if (!(c.zeta_tol >= 0.0 && c.zeta_tol <= 1.0)) throw ConfigError("zeta_tol must lie in [0, 1]");
  for (double z : c.zeta_sweep)
    if (!(z >= 0.0 && z <= 1.0)) throw ConfigError("zeta_sweep values must lie in [0, 1]");
  if (c.fine_exp_ref != c.fine_exp)
    throw ConfigError("fine_exp_ref must equal fine_exp (LOD and reference share the fine grid)");
  const CoefficientId id = parse_coefficient_id(c.coefficient);
  parse_rhs_id(c.rhs);
  if (id == CoefficientId::Custom) {
    if (c.coefficient_files.empty()) throw ConfigError("coefficient = custom needs coefficient_files");
  } else if (id != CoefficientId::Constant) {
    if (!(c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    const double h = pow2(c.fine_exp);
    if (h > c.epsilon / 4.0 * (1.0 + 1e-12))
      throw ConfigError("fine grid h = 2^-" + std::to_string(c.fine_exp) + " does not resolve epsilon (need h <= eps/4)");
  }
  auto check_tau = [&](int e) {
    const double tau = pow2(e);
    const double n = std::round(c.T / tau);
    if (n < 1.0 || std::abs(n * tau - c.T) > 1e-9 * c.T)
      throw ConfigError("tau = 2^-" + std::to_string(e) + " does not divide T");
  };
  check_tau(c.tau_exp);
  check_tau(c.tau_exp_ref);
  for (int e : c.time_sweep) check_tau(e);
}

CoefficientSpec coefficient_spec(const RunConfig& c) {
  const CoefficientId id = parse_coefficient_id(c.coefficient);
  if (id == CoefficientId::Custom) {
    std::vector<std::filesystem::path> files(c.coefficient_files.begin(), c.coefficient_files.end());
    return load_custom_coefficient(files);
  }
  CoefficientSpec s;
  s.id = id;
  s.epsilon = c.epsilon;
  return s;
}

RhsSpec rhs_spec(const RunConfig& c) { return RhsSpec{parse_rhs_id(c.rhs)}; }

namespace {

RunConfig fig1(bool full_scale, const std::string& rhs) {
  RunConfig c;
  c.coefficient = "periodic_product";
  c.rhs = rhs;
  c.scheme = Scheme::ImplicitMidpoint;
  c.update_mode = UpdateMode::All;
  c.T = 1.0;
  c.tau_exp = 7;
  c.tau_exp_ref = 7;
  if (full_scale) {
    c.epsilon = pow2(7);
    c.fine_exp = c.fine_exp_ref = 9;
    c.coarse_exp = 6;
    c.k = 3;
    c.space_sweep = {{2, 1}, {3, 2}, {4, 2}, {5, 3}, {6, 3}};
    c.time_sweep = {2, 3, 4, 5, 6};
  } else {
    c.epsilon = pow2(5);
    c.fine_exp = c.fine_exp_ref = 7;
    c.coarse_exp = 5;
    c.k = 3;
    c.space_sweep = {{2, 1}, {3, 2}, {4, 2}, {5, 3}};
    c.time_sweep = {2, 3, 4, 5};
  }
  return c;
}

RunConfig disc_family(bool full_scale, const std::string& coefficient) {
  RunConfig c = fig1(full_scale, "f_sine");
  c.coefficient = coefficient;
  c.update_mode = UpdateMode::Adaptive;
  c.zeta_tol = 0.5;
  c.time_sweep.clear();
  c.zeta_sweep = {0.0, 0.25, 0.5, 0.75, 1.0};
  return c;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig1-desk",  "fig1-desk-f2",  "fig2-desk",  "fig3-desk",  "fig3-desk-a3",
          "fig1-full", "fig1-full-f2", "fig2-full", "fig3-full", "fig3-full-a3"};
}

RunConfig preset(const std::string& name) {
  if (name == "fig1-desk") return fig1(false, "f1_discontinuous");
  if (name == "fig1-desk-f2") return fig1(false, "f2_smooth");
  if (name == "fig1-full") return fig1(true, "f1_discontinuous");
  if (name == "fig1-full-f2") return fig1(true, "f2_smooth");
  if (name == "fig2-desk" || name == "fig2-full") {
    RunConfig c = disc_family(name == "fig2-full", "a1_tensor");
    c.zeta_sweep.clear();
    return c;
  }
  if (name == "fig3-desk" || name == "fig3-desk-a3" || name == "fig3-full" || name == "fig3-full-a3") {
    const bool full_scale = name.find("full") != std::string::npos;
    const bool a3 = name.ends_with("-a3");
    RunConfig c = disc_family(full_scale, a3 ? "a3_additive" : "a2_local_modulation");
    c.tau_exp = 6;
    c.space_sweep = {{2, 1}, {3, 2}, {4, 2}, {5, 3}};
    if (full_scale) {
      c.coarse_exp = 5;
      c.k = 3;
    } else {
      c.coarse_exp = 4;
      c.k = 2;
    }
    return c;
  }
  std::string names;
  for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "' (available: " + names + ")");
}

}  // namespace lod

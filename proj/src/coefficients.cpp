#include "lod/coefficients.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "lod/errors.hpp"
#include "lod/simd/kernels.hpp"

namespace lod {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Position inside the unit cell of period eps.
double cell(double x, double eps) {
  const double u = x / eps;
  return u - std::floor(u);
}

double disc(std::array<double, 2> x, int dim, double eps) {
  for (int a = 0; a < dim; ++a) {
    const double c = cell(x[a], eps);
    if (c < 0.25 || c > 0.75) return 1.0;
  }
  return 10.0;
}

double modulation(double t) { return 1.0 + 0.5 * std::cos(9.0 * t); }

bool in_modulated_region(std::array<double, 2> x, int dim) {
  for (int a = 0; a < dim; ++a)
    if (x[a] < 0.25 || x[a] > 0.75) return false;
  return true;
}

}  // namespace

double CoefficientSpec::evaluate(double t, std::array<double, 2> x, int dim) const {
  switch (id) {
    case CoefficientId::PeriodicProduct: {
      const double st = std::sin(kTwoPi * t);
      double v = 1.0;
      for (int a = 0; a < dim; ++a) v *= 3.0 + std::sin(kTwoPi * cell(x[a], epsilon)) + st;
      return v;
    }
    case CoefficientId::Disc:
      return disc(x, dim, epsilon);
    case CoefficientId::A1Tensor:
      return modulation(t) * disc(x, dim, epsilon);
    case CoefficientId::A2LocalModulation:
      return in_modulated_region(x, dim) ? modulation(t) * disc(x, dim, epsilon) : disc(x, dim, epsilon);
    case CoefficientId::A3Additive:
      return disc(x, dim, epsilon) + modulation(t);
    case CoefficientId::Constant:
      return value;
    case CoefficientId::Custom:
      throw ConfigError("custom coefficients have no pointwise formula; use sample()");
  }
  return 0.0;
}

std::array<double, 2> CoefficientSpec::bounds() const {
  switch (id) {
    case CoefficientId::PeriodicProduct:
      return {1.0, 25.0};
    case CoefficientId::Disc:
      return {1.0, 10.0};
    case CoefficientId::A1Tensor:
    case CoefficientId::A2LocalModulation:
      return {0.5, 15.0};
    case CoefficientId::A3Additive:
      return {1.5, 11.5};
    case CoefficientId::Constant:
      return {value, value};
    case CoefficientId::Custom: {
      double lo = INFINITY, hi = 0.0;
      for (const auto& s : *custom)
        for (double v : s.values) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      return {lo, hi};
    }
  }
  return {0.0, 0.0};
}

std::string CoefficientSpec::name() const {
  switch (id) {
    case CoefficientId::PeriodicProduct: return "periodic_product";
    case CoefficientId::Disc: return "a_disc";
    case CoefficientId::A1Tensor: return "a1_tensor";
    case CoefficientId::A2LocalModulation: return "a2_local_modulation";
    case CoefficientId::A3Additive: return "a3_additive";
    case CoefficientId::Constant: return "constant";
    case CoefficientId::Custom: return "custom";
  }
  return "?";
}

CoefficientId parse_coefficient_id(const std::string& name) {
  if (name == "periodic_product") return CoefficientId::PeriodicProduct;
  if (name == "a_disc") return CoefficientId::Disc;
  if (name == "a1_tensor" || name == "a1") return CoefficientId::A1Tensor;
  if (name == "a2_local_modulation" || name == "a2") return CoefficientId::A2LocalModulation;
  if (name == "a3_additive" || name == "a3") return CoefficientId::A3Additive;
  if (name == "constant") return CoefficientId::Constant;
  if (name == "custom") return CoefficientId::Custom;
  throw ConfigError("unknown coefficient '" + name + "'");
}

std::uint64_t hash_values(std::span<const double> values) {
  // FNV-1a over the bit patterns.
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

CoefficientSnapshot make_snapshot(double t, std::vector<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!(values[i] > 0.0)) throw ConfigError("coefficient snapshot: nonpositive value at element " + std::to_string(i));
  CoefficientSnapshot s;
  s.time = t;
  s.hash = hash_values(values);
  s.values = std::move(values);
  return s;
}

CoefficientSnapshot sample(const CoefficientSpec& spec, double t, const GridHierarchy& grid) {
  const std::size_t ne = grid.num_elements(Level::Fine);
  if (spec.id == CoefficientId::Custom) {
    if (!spec.custom || spec.custom->empty()) throw ConfigError("custom coefficient has no snapshots");
    const CustomSnapshot* pick = nullptr;
    for (const auto& s : *spec.custom)
      if (s.time <= t + 1e-12) pick = &s;
    if (pick == nullptr) throw ConfigError("custom coefficient: no snapshot at or before t = " + std::to_string(t));
    if (pick->dim != grid.dim() || pick->n != grid.n_fine())
      throw ConfigError("custom coefficient: snapshot grid does not match the fine grid");
    return make_snapshot(t, pick->values);
  }
  if (spec.id != CoefficientId::Constant) {
    if (!(spec.epsilon > 0.0)) throw ConfigError("coefficient epsilon must be positive");
    if (grid.width(Level::Fine) > spec.epsilon / 4.0 * (1.0 + 1e-12))
      throw ConfigError("fine grid does not resolve epsilon: h = " + std::to_string(grid.width(Level::Fine)) +
                        " > eps/4 = " + std::to_string(spec.epsilon / 4.0));
  }
  std::vector<double> values(ne);
  for (std::size_t e = 0; e < ne; ++e) values[e] = spec.evaluate(t, grid.element_midpoint(Level::Fine, e), grid.dim());
  return make_snapshot(t, std::move(values));
}

std::vector<double> restrict_to_patch(const CoefficientSnapshot& snapshot, const Patch& patch) {
  std::vector<double> out(patch.fine_elements.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = snapshot.values[patch.fine_elements[i]];
  return out;
}

double patch_average(const CoefficientSnapshot& snapshot, const Patch& patch) {
  const std::vector<double> local = restrict_to_patch(snapshot, patch);
  return simd::sum(local) / static_cast<double>(local.size());
}

std::vector<double> scaled_restriction(std::span<const double> patch_values) {
  std::vector<double> out(patch_values.size());
  const double avg = simd::sum(patch_values) / static_cast<double>(patch_values.size());
  simd::kernels().divide(patch_values.data(), avg, out.data(), out.size());
  return out;
}

std::vector<double> scaled_restriction(const CoefficientSnapshot& snapshot, const Patch& patch) {
  return scaled_restriction(restrict_to_patch(snapshot, patch));
}

double RhsSpec::evaluate(double t, std::array<double, 2> x, int dim) const {
  const double x1 = x[0];
  const double x2 = dim > 1 ? x[1] : 0.5;
  switch (id) {
    case RhsId::F1Discontinuous:
      return x1 > 0.4 ? 20.0 * t + 230.0 * t * t : 100.0 * t + 2300.0 * t * t;
    case RhsId::F2Smooth: {
      const double b1 = x1 - x1 * x1, b2 = x2 - x2 * x2;
      return 20.0 * t * b1 * b2 + 230.0 * t * t * (b1 + b2);
    }
    case RhsId::FSine:
      return std::sin(std::numbers::pi * x1) * (dim > 1 ? std::sin(std::numbers::pi * x2) : 1.0) *
             (5.0 * t + 50.0 * t * t);
    case RhsId::Zero:
      return 0.0;
  }
  return 0.0;
}

std::string RhsSpec::name() const {
  switch (id) {
    case RhsId::F1Discontinuous: return "f1_discontinuous";
    case RhsId::F2Smooth: return "f2_smooth";
    case RhsId::FSine: return "f_sine";
    case RhsId::Zero: return "zero";
  }
  return "?";
}

RhsId parse_rhs_id(const std::string& name) {
  if (name == "f1_discontinuous" || name == "f1") return RhsId::F1Discontinuous;
  if (name == "f2_smooth" || name == "f2") return RhsId::F2Smooth;
  if (name == "f_sine" || name == "sine") return RhsId::FSine;
  if (name == "zero") return RhsId::Zero;
  throw ConfigError("unknown right-hand side '" + name + "'");
}

CustomSnapshot read_coefficient_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open coefficient file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# lod-coefficient v1", 0) != 0)
    throw ConfigError(path.string() + ": missing '# lod-coefficient v1' header");
  CustomSnapshot s;
  bool have_dim = false, have_n = false, have_t = false;
  while (!(have_dim && have_n && have_t) && std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dim") have_dim = static_cast<bool>(ls >> s.dim);
    else if (key == "n") have_n = static_cast<bool>(ls >> s.n);
    else if (key == "t") have_t = static_cast<bool>(ls >> s.time);
    else throw ConfigError(path.string() + ": unexpected header line '" + line + "'");
  }
  if (!(have_dim && have_n && have_t)) throw ConfigError(path.string() + ": incomplete header");
  if ((s.dim != 1 && s.dim != 2) || s.n <= 0) throw ConfigError(path.string() + ": invalid dimensions");
  const std::size_t expected = s.dim == 1 ? static_cast<std::size_t>(s.n) : static_cast<std::size_t>(s.n) * s.n;
  s.values.reserve(expected);
  double v;
  while (in >> v) s.values.push_back(v);
  if (s.values.size() != expected)
    throw ConfigError(path.string() + ": expected " + std::to_string(expected) + " values, found " +
                      std::to_string(s.values.size()));
  for (double x : s.values)
    if (!(x > 0.0)) throw ConfigError(path.string() + ": nonpositive coefficient value");
  return s;
}

void write_coefficient_file(const std::filesystem::path& path, const CustomSnapshot& snapshot) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write coefficient file " + path.string());
  out << "# lod-coefficient v1\n";
  out << "dim " << snapshot.dim << "\n";
  out << "n " << snapshot.n << "\n";
  out.precision(17);
  out << "t " << snapshot.time << "\n";
  for (double v : snapshot.values) out << v << "\n";
}

CoefficientSpec load_custom_coefficient(const std::vector<std::filesystem::path>& files) {
  if (files.empty()) throw ConfigError("custom coefficient needs at least one file");
  auto snaps = std::make_shared<std::vector<CustomSnapshot>>();
  for (const auto& f : files) snaps->push_back(read_coefficient_file(f));
  std::sort(snaps->begin(), snaps->end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  CoefficientSpec spec;
  spec.id = CoefficientId::Custom;
  spec.custom = std::move(snaps);
  return spec;
}

}  // namespace lod

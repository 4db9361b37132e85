#pragma once

// Locally scaled error indicator for reusing a corrector computed with an
// older coefficient, the tolerance policy, and marking.
//
// With a^i the coefficient stored in K's corrector and a^n the current one,
// both divided by their patch averages,
//
//   E_K^2 = max_K (a^i / a^n) * sum_{K' in U(K)} delta_{K'}^2 gamma_{K'},
//   delta_{K'} = max over fine elements of K' of |a^i - a^n| / sqrt(a^i a^n),
//   gamma_{K'} = max_c ||(a^i)^{1/2}(chi_K grad v_c - grad Q_K v_c)||^2_{K'}
//                      / ||(a^i)^{1/2} grad v_c||^2_K,
//
// the maximum taken over coarse functions v_c on K modulo constants.

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "lod/coefficients.hpp"
#include "lod/correctors.hpp"
#include "lod/grid.hpp"

namespace lod {

struct IndicatorReport {
  std::size_t step = 0;
  double time = 0.0;
  std::vector<double> values;  // E_K per coarse element
  double tol = 0.0;
  std::vector<std::size_t> marked;  // ascending
  double update_fraction = 0.0;
};

/// E_K for the corrector's stored coefficient against the current patch values.
double error_indicator(const Corrector& corrector, std::span<const double> current_patch);

/// E_K against a full current snapshot.
double error_indicator(const GridHierarchy& grid, const Corrector& corrector, const CoefficientSnapshot& current);

/// min + zeta (max - min). Throws ConfigError for empty values or zeta outside [0,1].
double tolerance(std::span<const double> values, double zeta);

/// {K : E_K >= tol}, ascending.
std::vector<std::size_t> mark(std::span<const double> values, double tol);

/// Report with tol = tolerance(values, zeta) and marked = mark(values, tol).
IndicatorReport make_report(std::size_t step, double time, std::vector<double> values, double zeta);

/// CSV rows `step,element,E_K,marked` with a header line.
void write_indicator_csv(std::ostream& out, std::span<const IndicatorReport> reports);

}  // namespace lod

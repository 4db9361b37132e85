#include "lod/indicator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lod/errors.hpp"
#include "lod/fem.hpp"
#include "lod/simd/kernels.hpp"
#include "lod/sparse_linalg.hpp"

namespace lod {

const std::vector<double>& LocalCorrector::indicator_gammas() const {
  std::call_once(gamma_once_, [this] {
    const PatchFrame& f = frame_;
    const int nb = 1 << f.dim;
    const ElementMatrices em = element_matrices(f.dim, f.h);
    const std::size_t center = f.center_element();
    const double inv_avg = 1.0 / average_;

    std::vector<DenseMatrix> b(f.num_coarse_elements(), DenseMatrix::Zero(nb, nb));
    DenseMatrix g = DenseMatrix::Zero(nb, nb);
    DenseMatrix w(nb, nb), p(nb, nb), s(nb, nb);
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) s(i, j) = em.k(i, j);

    for (std::size_t e = 0; e < f.num_fine_elements(); ++e) {
      const auto nodes = f.fine_element_nodes(e);
      const std::size_t c = f.fine_to_coarse_element(e);
      const bool in_k = c == center;
      for (int m = 0; m < nb; ++m) {
        const int x = static_cast<int>(nodes[m] % f.fine_nodes[0]);
        const int y = static_cast<int>(nodes[m] / f.fine_nodes[0]);
        for (int j = 0; j < nb; ++j) {
          double lam = 0.0;
          if (in_k) {
            lam = 1.0;
            const int l[2] = {x - f.shape.offset[0] * f.r, y - f.shape.offset[1] * f.r};
            for (int a = 0; a < f.dim; ++a) {
              const double xi = static_cast<double>(l[a]) / f.r;
              lam *= ((j >> a) & 1) ? xi : 1.0 - xi;
            }
          }
          p(m, j) = lam;
          w(m, j) = lam - corrections_(static_cast<Eigen::Index>(nodes[m]), j);
        }
      }
      const double a_hat = coefficient_[e] * inv_avg;
      b[c].noalias() += a_hat * (w.transpose() * s * w);
      if (in_k) g.noalias() += a_hat * (p.transpose() * s * p);
    }
    const DenseMatrix ones = DenseMatrix::Ones(nb, 1);
    gammas_.resize(b.size());
    for (std::size_t c = 0; c < b.size(); ++c) gammas_[c] = max_generalized_eig(b[c], g, ones);
  });
  return gammas_;
}

double error_indicator(const Corrector& corrector, std::span<const double> current_patch) {
  const LocalCorrector& lc = *corrector.local;
  const PatchFrame& f = lc.frame();
  const std::vector<double>& lagged = lc.coefficient();
  if (current_patch.size() != lagged.size())
    throw ConfigError("error_indicator: current coefficient has " + std::to_string(current_patch.size()) +
                      " values, patch has " + std::to_string(lagged.size()));
  for (double v : current_patch)
    if (!(v > 0.0)) throw ConfigError("error_indicator: nonpositive current coefficient");

  const std::vector<double> ai = scaled_restriction(lagged);
  const std::vector<double> an = scaled_restriction(current_patch);
  const auto& kt = simd::kernels();
  std::vector<double> jump(ai.size());
  kt.relative_jump(ai.data(), an.data(), jump.data(), jump.size());

  // Per coarse element of the patch: delta = max jump; the ratio bound uses K only.
  std::vector<double> delta(f.num_coarse_elements(), 0.0);
  const std::size_t center = f.center_element();
  double ratio = 0.0;
  for (std::size_t e = 0; e < jump.size(); ++e) {
    const std::size_t c = f.fine_to_coarse_element(e);
    delta[c] = std::max(delta[c], jump[e]);
    if (c == center) ratio = std::max(ratio, ai[e] / an[e]);
  }

  double sum = 0.0;
  bool any = false;
  for (double d : delta) any = any || d > 0.0;
  if (!any) return 0.0;
  const std::vector<double>& gamma = lc.indicator_gammas();
  for (std::size_t c = 0; c < delta.size(); ++c) sum += delta[c] * delta[c] * gamma[c];
  return std::sqrt(ratio * sum);
}

double error_indicator(const GridHierarchy& grid, const Corrector& corrector, const CoefficientSnapshot& current) {
  if (current.values.size() != grid.num_elements(Level::Fine))
    throw ConfigError("error_indicator: snapshot does not match the fine grid");
  const Patch patch = make_patch(grid, corrector.element, corrector.k);
  return error_indicator(corrector, restrict_to_patch(current, patch));
}

double tolerance(std::span<const double> values, double zeta) {
  if (values.empty()) throw ConfigError("tolerance: no indicator values");
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw ConfigError("tolerance: zeta must lie in [0, 1]");
  double lo = 0.0, hi = 0.0;
  simd::kernels().minmax(values.data(), values.size(), &lo, &hi);
  return lo + zeta * (hi - lo);
}

std::vector<std::size_t> mark(std::span<const double> values, double tol) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] >= tol) out.push_back(i);
  return out;
}

IndicatorReport make_report(std::size_t step, double time, std::vector<double> values, double zeta) {
  IndicatorReport r;
  r.step = step;
  r.time = time;
  r.tol = tolerance(values, zeta);
  r.marked = mark(values, r.tol);
  r.update_fraction = static_cast<double>(r.marked.size()) / static_cast<double>(values.size());
  r.values = std::move(values);
  return r;
}

void write_indicator_csv(std::ostream& out, std::span<const IndicatorReport> reports) {
  out << "step,element,E_K,marked\n";
  char buf[64];
  for (const auto& r : reports) {
    std::size_t next = 0;
    for (std::size_t k = 0; k < r.values.size(); ++k) {
      const bool marked = next < r.marked.size() && r.marked[next] == k;
      if (marked) ++next;
      std::snprintf(buf, sizeof buf, "%.17g", r.values[k]);
      out << r.step << ',' << k << ',' << buf << ',' << (marked ? 1 : 0) << '\n';
    }
  }
}

}  // namespace lod

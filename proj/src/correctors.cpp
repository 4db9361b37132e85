#include "lod/correctors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lod/errors.hpp"
#include "lod/simd/kernels.hpp"

namespace lod {

PatchShape patch_shape(const GridHierarchy& grid, const Patch& patch) {
  PatchShape s;
  s.extent = patch.coarse_extent();
  s.offset = {patch.center[0] - patch.lo[0], patch.center[1] - patch.lo[1]};
  const int nc = grid.n_coarse();
  s.on_boundary = {patch.lo[0] == 0, patch.hi[0] == nc, grid.dim() > 1 && patch.lo[1] == 0,
                   grid.dim() > 1 && patch.hi[1] == nc};
  s.k = patch.k;
  return s;
}

PatchFrame::PatchFrame(const GridHierarchy& grid, const PatchShape& s)
    : dim(grid.dim()), r(grid.refinement()), h(grid.width(Level::Fine)), shape(s) {
  fine_nodes = {s.extent[0] * r + 1, dim > 1 ? s.extent[1] * r + 1 : 1};
  fine_elements = {s.extent[0] * r, dim > 1 ? s.extent[1] * r : 1};
  coarse_nodes = {s.extent[0] + 1, dim > 1 ? s.extent[1] + 1 : 1};
}

std::array<std::size_t, 4> PatchFrame::fine_element_nodes(std::size_t e) const {
  const int ex = static_cast<int>(e % fine_elements[0]);
  const int ey = static_cast<int>(e / fine_elements[0]);
  std::array<std::size_t, 4> out{};
  for (int c = 0; c < (1 << dim); ++c) out[c] = fine_node(ex + (c & 1), ey + ((c >> 1) & 1));
  return out;
}

std::size_t PatchFrame::fine_to_coarse_element(std::size_t e) const {
  const int ex = static_cast<int>(e % fine_elements[0]);
  const int ey = static_cast<int>(e / fine_elements[0]);
  return static_cast<std::size_t>(ex / r) + static_cast<std::size_t>(dim > 1 ? ey / r : 0) * shape.extent[0];
}

std::array<std::size_t, 4> PatchFrame::coarse_element_nodes(std::size_t c) const {
  const int cx = static_cast<int>(c % shape.extent[0]);
  const int cy = static_cast<int>(c / shape.extent[0]);
  std::array<std::size_t, 4> out{};
  for (int q = 0; q < (1 << dim); ++q) out[q] = coarse_node(cx + (q & 1), cy + ((q >> 1) & 1));
  return out;
}

std::size_t PatchFrame::center_element() const {
  return static_cast<std::size_t>(shape.offset[0]) + static_cast<std::size_t>(shape.offset[1]) * shape.extent[0];
}

bool PatchFrame::fine_node_free(int x, int y) const {
  const bool fx = x > 0 && x < fine_nodes[0] - 1;
  return dim == 1 ? fx : fx && y > 0 && y < fine_nodes[1] - 1;
}

bool PatchFrame::coarse_node_free(int x, int y) const {
  if ((x == 0 && shape.on_boundary[0]) || (x == shape.extent[0] && shape.on_boundary[1])) return false;
  if (dim > 1 && ((y == 0 && shape.on_boundary[2]) || (y == shape.extent[1] && shape.on_boundary[3]))) return false;
  return true;
}

namespace {

// Value of corner function `corner` of coarse element (cx, cy) at local fine node (x, y).
double coarse_shape_value(const PatchFrame& f, int cx, int cy, int corner, int x, int y) {
  const int lx = x - cx * f.r, ly = y - cy * f.r;
  double w = 1.0;
  const int l[2] = {lx, ly};
  for (int a = 0; a < f.dim; ++a) {
    if (l[a] < 0 || l[a] > f.r) return 0.0;
    const double xi = static_cast<double>(l[a]) / f.r;
    w *= ((corner >> a) & 1) ? xi : 1.0 - xi;
  }
  return w;
}

struct LocalSolve {
  DenseMatrix corrections;
  double kernel_residual = 0.0;
};

LocalSolve solve_corrector_problem(const GridHierarchy& grid, const PatchShape& shape,
                                   std::span<const double> coefficient, const DenseMatrix& local_interp) {
  const PatchFrame f(grid, shape);
  const int nb = grid.corners();
  if (coefficient.size() != f.num_fine_elements())
    throw ConfigError("corrector: expected " + std::to_string(f.num_fine_elements()) +
                      " patch coefficient values, got " + std::to_string(coefficient.size()));

  // Free numbering of the patch interior.
  std::vector<std::int64_t> free(f.num_fine_nodes(), -1);
  std::int64_t nfree = 0;
  for (int y = 0; y < f.fine_nodes[1]; ++y)
    for (int x = 0; x < f.fine_nodes[0]; ++x)
      if (f.fine_node_free(x, y)) free[f.fine_node(x, y)] = nfree++;

  LocalSolve out;
  out.corrections = DenseMatrix::Zero(static_cast<Eigen::Index>(f.num_fine_nodes()), nb);
  if (nfree == 0) return out;

  const ElementMatrices em = element_matrices(f.dim, f.h);
  const std::size_t center = f.center_element();

  std::vector<Triplet> at;
  at.reserve(f.num_fine_elements() * nb * nb);
  DenseMatrix rhs = DenseMatrix::Zero(nfree, nb);
  for (std::size_t e = 0; e < f.num_fine_elements(); ++e) {
    const double a = coefficient[e];
    const auto nodes = f.fine_element_nodes(e);
    for (int i = 0; i < nb; ++i) {
      const auto fi = free[nodes[i]];
      if (fi < 0) continue;
      for (int j = 0; j < nb; ++j) {
        const auto fj = free[nodes[j]];
        if (fj >= 0) at.emplace_back(static_cast<int>(fi), static_cast<int>(fj), a * em.k(i, j));
      }
    }
    if (f.fine_to_coarse_element(e) != center) continue;
    // Right-hand side: (a grad lambda_j, grad w)_K.
    for (int m = 0; m < nb; ++m) {
      const int x = static_cast<int>(nodes[m] % f.fine_nodes[0]);
      const int y = static_cast<int>(nodes[m] / f.fine_nodes[0]);
      for (int j = 0; j < nb; ++j) {
        const double lam = coarse_shape_value(f, shape.offset[0], shape.offset[1], j, x, y);
        if (lam == 0.0) continue;
        for (int i = 0; i < nb; ++i) {
          const auto fi = free[nodes[i]];
          if (fi >= 0) rhs(fi, j) += a * em.k(i, m) * lam;
        }
      }
    }
  }
  SparseMatrix a(nfree, nfree);
  a.setFromTriplets(at.begin(), at.end());
  a.makeCompressed();

  // Constraint rows: I_H restricted to the patch, one per coarse node that is
  // free in the domain. Free coarse nodes are interior to the domain and so
  // shared by 2^d coarse elements.
  const double share = 1.0 / nb;
  const int nx = f.r + 1;
  std::vector<Triplet> ct;
  std::vector<std::size_t> row_node;
  for (int cy = 0; cy < f.coarse_nodes[1]; ++cy)
    for (int cx = 0; cx < f.coarse_nodes[0]; ++cx) {
      if (!f.coarse_node_free(cx, cy)) continue;
      const std::size_t before = ct.size();
      const int row = static_cast<int>(row_node.size());
      for (int q = 0; q < nb; ++q) {
        // Coarse element for which (cx, cy) is corner q.
        const int ex = cx - (q & 1), ey = cy - ((q >> 1) & 1);
        if (ex < 0 || ex >= shape.extent[0]) continue;
        if (f.dim > 1 && (ey < 0 || ey >= shape.extent[1])) continue;
        const int ny = f.dim > 1 ? nx : 1;
        for (int ly = 0; ly < ny; ++ly)
          for (int lx = 0; lx < nx; ++lx) {
            const auto col = free[f.fine_node(ex * f.r + lx, (f.dim > 1 ? ey * f.r : 0) + ly)];
            const double v = local_interp(q, lx + nx * ly);
            if (col >= 0 && v != 0.0) ct.emplace_back(row, static_cast<int>(col), share * v);
          }
      }
      if (ct.size() > before) row_node.push_back(f.coarse_node(cx, cy));
    }
  SparseMatrix c(static_cast<Eigen::Index>(row_node.size()), nfree);
  c.setFromTriplets(ct.begin(), ct.end());
  c.makeCompressed();

  DenseMatrix x;
  try {
    x = solve_saddle(a, c, rhs);
  } catch (const RankDeficientError& err) {
    const std::size_t node = row_node[err.row()];
    throw RankDeficientError(node, "corrector: constraint of patch coarse node (" +
                                       std::to_string(node % f.coarse_nodes[0]) + ", " +
                                       std::to_string(node / f.coarse_nodes[0]) + ") is linearly dependent");
  }
  if (c.rows() > 0) out.kernel_residual = (c * x).cwiseAbs().maxCoeff();
  for (std::size_t l = 0; l < free.size(); ++l)
    if (free[l] >= 0) out.corrections.row(static_cast<Eigen::Index>(l)) = x.row(free[l]);
  return out;
}

}  // namespace

LocalCorrector::LocalCorrector(const GridHierarchy& grid, const PatchShape& shape, std::vector<double> coefficient,
                               DenseMatrix corrections, double kernel_residual)
    : frame_(grid, shape),
      coefficient_(std::move(coefficient)),
      corrections_(std::move(corrections)),
      kernel_residual_(kernel_residual) {
  const PatchFrame& f = frame_;
  const int nb = grid.corners();
  if (coefficient_.size() != f.num_fine_elements() ||
      static_cast<std::size_t>(corrections_.rows()) != f.num_fine_nodes() || corrections_.cols() != nb)
    throw ConfigError("corrector data does not match the patch shape");
  average_ = simd::sum(coefficient_) / static_cast<double>(coefficient_.size());
  hash_ = hash_values(coefficient_);

  // Nodal residues  r_j = sum_e a_e S_e w_j|_e  and  m_j = sum_e M_e w_j|_e,
  // w_j = chi_K lambda_j - q_j (broken across element boundaries).
  const ElementMatrices em = element_matrices(f.dim, f.h);
  const std::size_t center = f.center_element();
  DenseMatrix rs = DenseMatrix::Zero(corrections_.rows(), nb);
  DenseMatrix ms = DenseMatrix::Zero(corrections_.rows(), nb);
  double w[4][4];
  for (std::size_t e = 0; e < f.num_fine_elements(); ++e) {
    const auto nodes = f.fine_element_nodes(e);
    const bool in_k = f.fine_to_coarse_element(e) == center;
    for (int m = 0; m < nb; ++m) {
      const int x = static_cast<int>(nodes[m] % f.fine_nodes[0]);
      const int y = static_cast<int>(nodes[m] / f.fine_nodes[0]);
      for (int j = 0; j < nb; ++j) {
        const double lam = in_k ? coarse_shape_value(f, shape.offset[0], shape.offset[1], j, x, y) : 0.0;
        w[m][j] = lam - corrections_(static_cast<Eigen::Index>(nodes[m]), j);
      }
    }
    const double a = coefficient_[e];
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) {
        double sk = 0.0, sm = 0.0;
        for (int m = 0; m < nb; ++m) {
          sk += em.k(i, m) * w[m][j];
          sm += em.m(i, m) * w[m][j];
        }
        rs(static_cast<Eigen::Index>(nodes[i]), j) += a * sk;
        ms(static_cast<Eigen::Index>(nodes[i]), j) += sm;
      }
  }

  // Test with the coarse shape functions of the patch: lambda_i at fine nodes.
  stiffness_ = DenseMatrix::Zero(static_cast<Eigen::Index>(f.num_coarse_nodes()), nb);
  mass_ = DenseMatrix::Zero(static_cast<Eigen::Index>(f.num_coarse_nodes()), nb);
  for (int y = 0; y < f.fine_nodes[1]; ++y)
    for (int x = 0; x < f.fine_nodes[0]; ++x) {
      const auto l = static_cast<Eigen::Index>(f.fine_node(x, y));
      const int cx = std::min(x / f.r, shape.extent[0] - 1);
      const int cy = f.dim > 1 ? std::min(y / f.r, shape.extent[1] - 1) : 0;
      for (int q = 0; q < nb; ++q) {
        const double lam = coarse_shape_value(f, cx, cy, q, x, y);
        if (lam == 0.0) continue;
        const auto z = static_cast<Eigen::Index>(f.coarse_node(cx + (q & 1), cy + ((q >> 1) & 1)));
        stiffness_.row(z) += lam * rs.row(l);
        mass_.row(z) += lam * ms.row(l);
      }
    }
}

std::shared_ptr<const LocalCorrector> compute_local_corrector(const GridHierarchy& grid, const Patch& patch,
                                                              std::span<const double> patch_coefficient) {
  const PatchShape shape = patch_shape(grid, patch);
  const InterpolationOperator ih = quasi_interpolation(grid);
  LocalSolve s = solve_corrector_problem(grid, shape, patch_coefficient, ih.local);
  return std::make_shared<const LocalCorrector>(
      grid, shape, std::vector<double>(patch_coefficient.begin(), patch_coefficient.end()), std::move(s.corrections),
      s.kernel_residual);
}

Corrector compute_corrector(const GridHierarchy& grid, std::size_t element, int k,
                            const CoefficientSnapshot& snapshot) {
  const Patch patch = make_patch(grid, element, k);
  const std::vector<double> coef = restrict_to_patch(snapshot, patch);
  return Corrector{element, k, snapshot.time, compute_local_corrector(grid, patch, coef)};
}

// --- factory ------------------------------------------------------------------

CorrectorFactory::CorrectorFactory(const GridHierarchy& grid, std::optional<std::filesystem::path> cache_dir)
    : grid_(grid), cache_dir_(std::move(cache_dir)), local_interp_(quasi_interpolation(grid).local) {
  if (cache_dir_) {
    std::error_code ec;
    std::filesystem::create_directories(*cache_dir_, ec);
    if (ec) throw ConfigError("cannot create corrector cache directory " + cache_dir_->string() + ": " + ec.message());
  }
}

Corrector CorrectorFactory::compute(std::size_t element, int k, const CoefficientSnapshot& snapshot) {
  const Patch patch = make_patch(grid_, element, k);
  const std::vector<double> coef = restrict_to_patch(snapshot, patch);
  return compute(patch, coef, snapshot.time);
}

Corrector CorrectorFactory::compute(const Patch& patch, std::span<const double> patch_coefficient, double time) {
  const PatchShape shape = patch_shape(grid_, patch);
  const std::uint64_t hash = hash_values(patch_coefficient);
  const auto key = std::make_pair(shape, hash);
  {
    std::lock_guard lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end())
      for (const auto& cand : it->second)
        if (std::equal(cand->coefficient().begin(), cand->coefficient().end(), patch_coefficient.begin(),
                       patch_coefficient.end())) {
          ++hits_;
          return Corrector{patch.center_element, patch.k, time, cand};
        }
  }

  std::shared_ptr<const LocalCorrector> local;
  std::filesystem::path file;
  if (cache_dir_) {
    file = *cache_dir_ / corrector_file_name(grid_, patch.center_element, patch.k, hash);
    if (std::filesystem::exists(file)) {
      Corrector stored = read_corrector_file(file, grid_);
      if (stored.local->shape() == shape &&
          std::equal(stored.local->coefficient().begin(), stored.local->coefficient().end(),
                     patch_coefficient.begin(), patch_coefficient.end()))
        local = stored.local;
    }
  }
  if (!local) {
    LocalSolve s = solve_corrector_problem(grid_, shape, patch_coefficient, local_interp_);
    local = std::make_shared<const LocalCorrector>(
        grid_, shape, std::vector<double>(patch_coefficient.begin(), patch_coefficient.end()),
        std::move(s.corrections), s.kernel_residual);
    std::lock_guard lock(mutex_);
    ++solves_;
  }
  Corrector out{patch.center_element, patch.k, time, local};
  if (cache_dir_ && !std::filesystem::exists(file)) write_corrector_file(file, grid_, out);

  std::lock_guard lock(mutex_);
  memo_[key].push_back(local);
  return out;
}

void CorrectorFactory::prune() {
  std::lock_guard lock(mutex_);
  for (auto it = memo_.begin(); it != memo_.end();) {
    auto& bucket = it->second;
    std::erase_if(bucket, [](const auto& p) { return p.use_count() == 1; });
    it = bucket.empty() ? memo_.erase(it) : std::next(it);
  }
}

// --- Petrov-Galerkin assembly ---------------------------------------------------

LodOperators assemble_pg(const GridHierarchy& grid, std::span<const Corrector> correctors, MassMode mass_mode,
                         double time, std::span<const double> scales) {
  const std::size_t ne = grid.num_elements(Level::Coarse);
  if (correctors.size() != ne)
    throw ConfigError("assemble_pg: expected one corrector per coarse element (" + std::to_string(ne) + "), got " +
                      std::to_string(correctors.size()));
  if (!scales.empty() && scales.size() != ne) throw ConfigError("assemble_pg: scale vector has wrong length");

  const auto& cidx = grid.free_index(Level::Coarse);
  const int nb = grid.corners();
  std::vector<Triplet> ts, tm;
  LodOperators ops;
  ops.time = time;
  ops.mass_mode = mass_mode;
  ops.contributions.resize(ne);
  for (std::size_t kk = 0; kk < ne; ++kk) {
    const Corrector& corr = correctors[kk];
    if (!corr.local || corr.element != kk) throw ConfigError("assemble_pg: correctors must be ordered by element");
    const PatchFrame& f = corr.local->frame();
    const double s = scales.empty() ? 1.0 : scales[kk];
    ops.contributions[kk] = {corr.local, s};

    const Coord ce = grid.element_coord(Level::Coarse, kk);
    const Coord lo{ce[0] - f.shape.offset[0], ce[1] - f.shape.offset[1]};
    std::vector<std::int64_t> rows(f.num_coarse_nodes());
    for (int y = 0; y < f.coarse_nodes[1]; ++y)
      for (int x = 0; x < f.coarse_nodes[0]; ++x)
        rows[f.coarse_node(x, y)] = cidx[grid.node_index(Level::Coarse, {lo[0] + x, lo[1] + y})];
    const auto corner_nodes = grid.element_nodes(Level::Coarse, kk);
    const DenseMatrix& sc = corr.local->stiffness_contribution();
    const DenseMatrix& mc = corr.local->mass_contribution();
    for (int j = 0; j < nb; ++j) {
      const auto col = cidx[corner_nodes[j]];
      if (col < 0) continue;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0) continue;
        const auto ii = static_cast<Eigen::Index>(i);
        if (sc(ii, j) != 0.0) ts.emplace_back(static_cast<int>(rows[i]), static_cast<int>(col), s * sc(ii, j));
        if (mass_mode == MassMode::PetrovGalerkin && mc(ii, j) != 0.0)
          tm.emplace_back(static_cast<int>(rows[i]), static_cast<int>(col), mc(ii, j));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(grid.num_free_nodes(Level::Coarse));
  ops.stiffness = SparseMatrix(n, n);
  ops.stiffness.setFromTriplets(ts.begin(), ts.end());
  ops.stiffness.makeCompressed();
  if (mass_mode == MassMode::PetrovGalerkin) {
    ops.mass = SparseMatrix(n, n);
    ops.mass.setFromTriplets(tm.begin(), tm.end());
    ops.mass.makeCompressed();
  } else {
    ops.mass = assemble_mass(grid, Level::Coarse).matrix;
  }
  return ops;
}

Vector prolong_lod_solution(const GridHierarchy& grid, std::span<const Corrector> correctors, const Vector& z) {
  if (static_cast<std::size_t>(z.size()) != grid.num_free_nodes(Level::Coarse))
    throw ConfigError("prolong_lod_solution: coarse vector has wrong length");
  Vector u = prolongation(grid) * z;
  const auto& cidx = grid.free_index(Level::Coarse);
  const auto& fidx = grid.free_index(Level::Fine);
  const int r = grid.refinement();
  for (const Corrector& corr : correctors) {
    const PatchFrame& f = corr.local->frame();
    const Coord ce = grid.element_coord(Level::Coarse, corr.element);
    const Coord flo{(ce[0] - f.shape.offset[0]) * r, grid.dim() > 1 ? (ce[1] - f.shape.offset[1]) * r : 0};
    const auto corners = grid.element_nodes(Level::Coarse, corr.element);
    double zc[4] = {0, 0, 0, 0};
    for (int j = 0; j < grid.corners(); ++j)
      if (const auto c = cidx[corners[j]]; c >= 0) zc[j] = z[c];
    const DenseMatrix& q = corr.local->corrections();
    for (int y = 0; y < f.fine_nodes[1]; ++y)
      for (int x = 0; x < f.fine_nodes[0]; ++x) {
        if (!f.fine_node_free(x, y)) continue;
        const auto l = static_cast<Eigen::Index>(f.fine_node(x, y));
        double v = 0.0;
        for (int j = 0; j < grid.corners(); ++j) v += zc[j] * q(l, j);
        u[fidx[grid.node_index(Level::Fine, {flo[0] + x, flo[1] + y})]] -= v;
      }
  }
  return u;
}

}  // namespace lod

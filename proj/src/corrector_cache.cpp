#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lod/correctors.hpp"
#include "lod/errors.hpp"

namespace lod {
namespace {

constexpr char kMagic[8] = {'L', 'O', 'D', 'C', 'O', 'R', 'R', '1'};

template <class T>
void put(std::ostream& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t b = 0; b < sizeof(T); ++b) out.put(static_cast<char>((bits >> (8 * b)) & 0xffU));
}

template <class T>
T get(std::istream& in, const std::filesystem::path& path) {
  std::uint64_t bits = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw ConfigError(path.string() + ": truncated corrector file");
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * b);
  }
  if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(bits);
  } else {
    return static_cast<T>(bits);
  }
}

// Patch around `element` with the radius of the stored corrector; the shape
// is recomputed from the grid rather than stored.
PatchShape shape_for(const GridHierarchy& grid, std::size_t element, int k) {
  return patch_shape(grid, make_patch(grid, element, k));
}

}  // namespace

std::filesystem::path corrector_file_name(const GridHierarchy& grid, std::size_t element, int k, std::uint64_t hash) {
  std::ostringstream os;
  os << "corr_d" << grid.dim() << "_H" << grid.coarse_exp() << "_h" << grid.fine_exp() << "_k" << k << "_K" << element
     << "_" << std::hex << std::setw(16) << std::setfill('0') << hash << ".bin";
  return os.str();
}

void write_corrector_file(const std::filesystem::path& path, const GridHierarchy& grid, const Corrector& corrector) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write corrector file " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.dim()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.coarse_exp()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.fine_exp()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(corrector.k));
    put<std::uint64_t>(out, corrector.element);
    put<std::uint64_t>(out, corrector.local->coefficient_hash());
    put<double>(out, corrector.lagged_time);
    const auto& coef = corrector.local->coefficient();
    put<std::uint64_t>(out, coef.size());
    for (double v : coef) put<double>(out, v);
    const DenseMatrix& q = corrector.local->corrections();
    put<std::uint64_t>(out, static_cast<std::uint64_t>(q.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(q.cols()));
    for (Eigen::Index j = 0; j < q.cols(); ++j)
      for (Eigen::Index i = 0; i < q.rows(); ++i) put<double>(out, q(i, j));
    put<double>(out, corrector.local->kernel_residual());
    if (!out) throw ConfigError("failed writing corrector file " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ConfigError("cannot move corrector file into place: " + ec.message());
}

Corrector read_corrector_file(const std::filesystem::path& path, const GridHierarchy& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open corrector file " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw ConfigError(path.string() + ": not a corrector file");
  CorrectorFileHeader h;
  h.dim = get<std::uint32_t>(in, path);
  h.coarse_exp = get<std::uint32_t>(in, path);
  h.fine_exp = get<std::uint32_t>(in, path);
  h.k = get<std::uint32_t>(in, path);
  h.element = get<std::uint64_t>(in, path);
  h.hash = get<std::uint64_t>(in, path);
  h.lagged_time = get<double>(in, path);
  if (static_cast<int>(h.dim) != grid.dim() || static_cast<int>(h.coarse_exp) != grid.coarse_exp() ||
      static_cast<int>(h.fine_exp) != grid.fine_exp())
    throw ConfigError(path.string() + ": corrector file belongs to a different grid");
  if (h.element >= grid.num_elements(Level::Coarse)) throw ConfigError(path.string() + ": element out of range");

  const PatchShape shape = shape_for(grid, h.element, static_cast<int>(h.k));
  const PatchFrame frame(grid, shape);
  const auto ncoef = get<std::uint64_t>(in, path);
  if (ncoef != frame.num_fine_elements()) throw ConfigError(path.string() + ": coefficient length mismatch");
  std::vector<double> coef(ncoef);
  for (double& v : coef) v = get<double>(in, path);
  if (hash_values(coef) != h.hash) throw ConfigError(path.string() + ": coefficient hash mismatch");
  const auto rows = get<std::uint64_t>(in, path);
  const auto cols = get<std::uint64_t>(in, path);
  if (rows != frame.num_fine_nodes() || cols != static_cast<std::uint64_t>(grid.corners()))
    throw ConfigError(path.string() + ": correction block has wrong shape");
  DenseMatrix q(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    for (Eigen::Index i = 0; i < q.rows(); ++i) q(i, j) = get<double>(in, path);
  const double residual = get<double>(in, path);
  return Corrector{static_cast<std::size_t>(h.element), static_cast<int>(h.k), h.lagged_time,
                   std::make_shared<const LocalCorrector>(grid, shape, std::move(coef), std::move(q), residual)};
}

}  // namespace lod

#pragma once

// Data-parallel inner loops shared by the coefficient, indicator and norm code.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The variant is chosen once per process from the CPU features; the
// environment variable LOD_SIMD=scalar forces the reference path.
//
// Elementwise kernels produce bitwise-identical results on every backend.
// Reductions (sum, dot) may differ in the last bits because the vector
// variants accumulate in four lanes.

#include <cstddef>
#include <span>
#include <string_view>

namespace lod::simd {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  Backend backend;
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  // out[i] = x[i] / s
  void (*divide)(const double* x, double s, double* out, std::size_t n);
  // out[i] = |a[i] - b[i]| / sqrt(a[i] * b[i])
  void (*relative_jump)(const double* a, const double* b, double* out, std::size_t n);
  // max_i a[i] / b[i]; 0 for n == 0
  double (*max_ratio)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // min and max of x; n must be > 0
  void (*minmax)(const double* x, std::size_t n, double* lo, double* hi);
};

/// Table selected for this process.
const KernelTable& kernels();

/// Table for a specific backend; nullptr if it was not compiled in or the
/// CPU does not support it.
const KernelTable* kernels_for(Backend backend);

std::string_view backend_name(Backend backend);

namespace scalar {
extern const KernelTable table;
}
namespace avx2 {
extern const KernelTable table;
}

// Convenience wrappers over the active table.
inline double sum(std::span<const double> x) { return kernels().sum(x.data(), x.size()); }
inline double dot(std::span<const double> x, std::span<const double> y) {
  return kernels().dot(x.data(), y.data(), x.size());
}

}  // namespace lod::simd

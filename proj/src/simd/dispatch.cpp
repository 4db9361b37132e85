#include <cstdlib>
#include <cstring>

#include "lod/simd/kernels.hpp"

namespace lod::simd {
namespace {

bool cpu_has_avx2() {
#if LOD_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& select() {
  const char* forced = std::getenv("LOD_SIMD");
  if (forced != nullptr && std::strcmp(forced, "scalar") == 0) return scalar::table;
  if (const KernelTable* t = kernels_for(Backend::Avx2)) return *t;
  return scalar::table;
}

}  // namespace

const KernelTable* kernels_for(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return &scalar::table;
    case Backend::Avx2:
#if LOD_HAVE_AVX2
      if (cpu_has_avx2()) return &avx2::table;
#endif
      return nullptr;
  }
  return nullptr;
}

const KernelTable& kernels() {
  static const KernelTable& active = select();
  return active;
}

std::string_view backend_name(Backend backend) {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

}  // namespace lod::simd

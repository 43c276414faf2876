#include <atomic>
#include <cstdlib>
#include <string>

#include "rigidlab/error.hpp"
#include "rigidlab/simd/kernels.hpp"

namespace rigidlab::simd {

#ifdef RIGIDLAB_HAVE_AVX2
namespace avx2 {
extern const KernelTable table;
}
#endif
#ifdef RIGIDLAB_HAVE_NEON
namespace neon {
extern const KernelTable table;
}
#endif

namespace {

bool cpu_has_avx2() noexcept {
#if defined(RIGIDLAB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* best_available() noexcept {
  if (const auto* t = table_for(Backend::avx2)) return t;
  if (const auto* t = table_for(Backend::neon)) return t;
  return &scalar::table;
}

const KernelTable* initial_table() {
  const char* env = std::getenv("RIGIDLAB_SIMD");
  if (env == nullptr) return best_available();
  const std::string want(env);
  if (want == "scalar") return &scalar::table;
  if (want == "avx2" && table_for(Backend::avx2)) return table_for(Backend::avx2);
  if (want == "neon" && table_for(Backend::neon)) return table_for(Backend::neon);
  // "auto", unknown names and unavailable backends fall back to detection
  return best_available();
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> t{initial_table()};
  return t;
}

}  // namespace

std::string_view to_string(Backend b) noexcept {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

const KernelTable* table_for(Backend b) noexcept {
  switch (b) {
    case Backend::scalar: return &scalar::table;
    case Backend::avx2:
#ifdef RIGIDLAB_HAVE_AVX2
      if (cpu_has_avx2()) return &avx2::table;
#endif
      return nullptr;
    case Backend::neon:
#ifdef RIGIDLAB_HAVE_NEON
      return &neon::table;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

void force_backend(Backend b) {
  const KernelTable* t = table_for(b);
  if (t == nullptr) throw DomainError("SIMD backend '" + std::string(to_string(b)) + "' is not available");
  active().store(t, std::memory_order_release);
}

Backend active_backend() { return kernels().backend; }

}  // namespace rigidlab::simd

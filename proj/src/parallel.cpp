#include "rigidlab/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <string>

namespace rigidlab::parallel {

namespace {

std::atomic<int> g_threads{0};

int default_threads() {
  if (const char* env = std::getenv("RIGIDLAB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  return omp_get_max_threads();
}

}  // namespace

void set_threads(int n) { g_threads.store(n > 0 ? n : 0); }

int threads() {
  const int n = g_threads.load();
  return n > 0 ? n : default_threads();
}

namespace detail {

void run(std::size_t n, void (*body)(void*, std::size_t), void* ctx) {
  const int nt = threads();
  if (nt <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(ctx, i);
    return;
  }
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
  for (long long i = 0; i < count; ++i) body(ctx, static_cast<std::size_t>(i));
}

}  // namespace detail

}  // namespace rigidlab::parallel

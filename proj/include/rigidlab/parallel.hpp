#pragma once

// Thin OpenMP wrapper. Work is always written to per-index slots and reduced
// afterwards in index order, so results do not depend on the thread count.

#include <cstddef>
#include <exception>
#include <mutex>

namespace rigidlab::parallel {

/// Caps the worker count. n <= 0 restores the default (RIGIDLAB_THREADS if
/// set, otherwise the OpenMP default).
void set_threads(int n);
int threads();

namespace detail {
void run(std::size_t n, void (*body)(void*, std::size_t), void* ctx);
}

/// Calls f(i) for i in [0, n) across the worker pool. The first exception
/// (lowest index) is rethrown on the calling thread once all workers finish.
template <class F>
void for_each_index(std::size_t n, F&& f) {
  struct Ctx {
    F* f;
    std::mutex m;
    std::exception_ptr err;
    std::size_t err_index = static_cast<std::size_t>(-1);
  } ctx{&f, {}, nullptr};
  detail::run(
      n,
      [](void* p, std::size_t i) {
        auto* c = static_cast<Ctx*>(p);
        try {
          (*c->f)(i);
        } catch (...) {
          std::lock_guard lock(c->m);
          if (i < c->err_index) {
            c->err_index = i;
            c->err = std::current_exception();
          }
        }
      },
      &ctx);
  if (ctx.err) std::rethrow_exception(ctx.err);
}

}  // namespace rigidlab::parallel

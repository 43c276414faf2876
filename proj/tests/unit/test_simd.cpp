#include <doctest.h>

#include <cmath>
#include <vector>

#include "rigidlab/core.hpp"
#include "rigidlab/samplers.hpp"
#include "rigidlab/simd/kernels.hpp"

using namespace rigidlab;
using namespace rigidlab::simd;

namespace {

std::vector<const KernelTable*> vector_tables() {
  std::vector<const KernelTable*> out;
  for (Backend b : {Backend::avx2, Backend::neon}) {
    if (const KernelTable* t = table_for(b)) out.push_back(t);
  }
  return out;
}

std::vector<double> random_vec(Engine& eng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * uniform01(eng);
  return v;
}

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("scalar table is always available") {
    REQUIRE(table_for(Backend::scalar) != nullptr);
    CHECK(table_for(Backend::scalar)->backend == Backend::scalar);
    MESSAGE("active backend: " << to_string(active_backend()));
  }

  TEST_CASE("reductions agree with the scalar reference") {
    const auto& ref = scalar::table;
    Engine eng = make_engine({7, 0});
    for (const KernelTable* t : vector_tables()) {
      // Lengths straddle every remainder of the vector width.
      for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 63u, 64u, 1000u, 4097u}) {
        const auto x = random_vec(eng, n, -3.0, 3.0);
        const auto y = random_vec(eng, n, -3.0, 3.0);
        const SqDiffDot a = ref.sq_diff_dot(x.data(), y.data(), n);
        const SqDiffDot b = t->sq_diff_dot(x.data(), y.data(), n);
        double scale_sq = 0.0, scale_dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          scale_sq += (x[i] - y[i]) * (x[i] - y[i]);
          scale_dot += std::abs(x[i] * y[i]);
        }
        CHECK(std::abs(a.sq_diff - b.sq_diff) <= 1e-13 * (scale_sq + 1e-300));
        CHECK(std::abs(a.dot - b.dot) <= 1e-13 * (scale_dot + 1e-300));
        CHECK(std::abs(ref.dot(x.data(), y.data(), n) - t->dot(x.data(), y.data(), n)) <= 1e-13 * (scale_dot + 1e-300));
      }
    }
  }

  TEST_CASE("counting kernels agree exactly with the scalar reference") {
    const auto& ref = scalar::table;
    Engine eng = make_engine({8, 0});
    for (const KernelTable* t : vector_tables()) {
      for (int d = 1; d <= 3; ++d) {
        for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 31u, 1001u}) {
          const double L = 12.0;
          std::vector<std::vector<double>> axes(3);
          Coords c;
          c.dim = d;
          c.n = n;
          for (int a = 0; a < d; ++a) {
            axes[a] = random_vec(eng, n, 0.0, L);
            // Put some points on exact window boundaries.
            for (std::size_t i = 0; i < n; i += 7) axes[a][i] = 6.0 + ((i / 7) % 3 == 0 ? 2.0 : -2.0);
            c.axes[a] = axes[a].data();
          }
          for (int trial = 0; trial < 20; ++trial) {
            double center[3];
            for (int a = 0; a < 3; ++a) center[a] = trial == 0 ? 6.0 : L * uniform01(eng);
            const double R = trial == 0 ? 2.0 : 0.5 + 3.0 * uniform01(eng);
            CHECK(ref.count_ball(c, center, R * R, L) == t->count_ball(c, center, R * R, L));
            CHECK(ref.count_box(c, center, R, L) == t->count_box(c, center, R, L));
            std::vector<double> d_ref(n), d_vec(n);
            ref.torus_dist2(c, center, L, d_ref.data());
            t->torus_dist2(c, center, L, d_vec.data());
            for (std::size_t i = 0; i < n; ++i) CHECK(d_ref[i] == d_vec[i]);
          }
        }
      }
    }
  }

  TEST_CASE("count_ball matches the minimal-image definition") {
    Engine eng = make_engine({9, 0});
    const double L = 10.0;
    const std::size_t n = 777;
    std::vector<double> x = random_vec(eng, n, 0.0, L), y = random_vec(eng, n, 0.0, L);
    Coords c;
    c.dim = 2;
    c.n = n;
    c.axes[0] = x.data();
    c.axes[1] = y.data();
    const double center[3] = {0.5, 9.7, 0.0};
    std::size_t brute = 0;
    const SimulationBox box(2, L);
    for (std::size_t i = 0; i < n; ++i) {
      if (torus_distance({center[0], center[1]}, {x[i], y[i]}, box) <= 3.0) ++brute;
    }
    CHECK(kernels().count_ball(c, center, 9.0, L) == brute);
  }

  TEST_CASE("forcing an unavailable backend throws") {
    for (Backend b : {Backend::avx2, Backend::neon}) {
      if (!table_for(b)) CHECK_THROWS(force_backend(b));
    }
    const Backend before = active_backend();
    force_backend(Backend::scalar);
    CHECK(active_backend() == Backend::scalar);
    force_backend(before);
  }
}

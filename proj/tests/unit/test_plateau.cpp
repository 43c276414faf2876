#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rigidlab/error.hpp"
#include "rigidlab/plateau.hpp"

using namespace rigidlab;

// Frozen values from tests/oracles/plateau_oracle.py (adaptive quadrature of
// an independent transcription of the profile).
namespace oracle {
struct Norms {
  int d;
  double K, grad2, norm2;
};
constexpr Norms kNorms[] = {
    {2, 2, 9.77106212394, 5.28718223315},   {2, 4, 4.88553106197, 10.0104042659},
    {2, 8, 3.25702070798, 21.3580669237},   {2, 16, 2.44276553098, 50.7358572662},
    {1, 2, 2.85714285714, 2.78354978355},   {1, 4, 0.952380952381, 4.35064935065},
    {1, 8, 0.408163265306, 7.48484848485},
};
}  // namespace oracle

namespace {

double numeric_grad_norm2(const PlateauFunction& phi) {
  // Midpoint rule on a fine grid, independent of the cached value.
  const int n = 400000;
  const double h = phi.K() / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) * h;
    const double g = phi.d1(r);
    s += g * g * (phi.dim() == 2 ? 2.0 * std::numbers::pi * r : 2.0);
  }
  return s * h;
}

}  // namespace

TEST_SUITE("plateau") {
  TEST_CASE("frozen norms") {
    for (const auto& o : oracle::kNorms) {
      CAPTURE(o.d);
      CAPTURE(o.K);
      const PlateauFunction phi = build_plateau(o.d, o.K);
      CHECK(phi.grad_norm2() == doctest::Approx(o.grad2).epsilon(1e-9));
      CHECK(phi.norm2() == doctest::Approx(o.norm2).epsilon(1e-9));
    }
  }

  TEST_CASE("smoothed gradient norm within a factor 1.5 of the unsmoothed ramp") {
    for (int d : {1, 2}) {
      for (double K : {1.5, 2.0, 4.0, 8.0, 64.0, 1e4}) {
        const PlateauFunction phi = build_plateau(d, K);
        const double ref = unsmoothed_grad_norm2(d, K);
        CHECK(phi.grad_norm2() / ref <= 1.5);
        CHECK(phi.grad_norm2() / ref >= 1.0 / 1.5);
      }
    }
    CHECK(unsmoothed_grad_norm2(2, 4.0) == doctest::Approx(2 * std::numbers::pi / std::log(4.0)));
    CHECK(unsmoothed_grad_norm2(1, 4.0) == doctest::Approx(2.0 / 3.0));
  }

  TEST_CASE("plateau shape") {
    for (int d : {1, 2}) {
      const PlateauFunction phi = build_plateau(d, 4.0);
      CHECK(phi.value(0.0) == 1.0);
      CHECK(phi.value(0.999) == 1.0);
      CHECK(phi.value(4.0) == 0.0);
      CHECK(phi.value(4.5) == 0.0);
      CHECK(phi.value(1e9) == 0.0);
      for (int i = 0; i <= 1000; ++i) {
        const double r = 5.0 * i / 1000.0;
        CHECK(phi.value(r) >= 0.0);
        CHECK(phi.value(r) <= 1.0);
        CHECK(phi.d1(r) <= 0.0);  // non-increasing
      }
    }
  }

  TEST_CASE("profile is twice continuously differentiable") {
    for (int d : {1, 2}) {
      for (double K : {2.0, 8.0}) {
        const PlateauFunction phi = build_plateau(d, K);
        std::vector<double> probes = phi.joints();
        probes.push_back(1.0);
        probes.push_back(K);
        // Across every joint the jumps of Phi, Phi' and Phi'' shrink in
        // proportion to the probe width; a true jump would not.
        const auto jump = [&](auto g, double r0, double e) { return std::abs(g(r0 + e) - g(r0 - e)); };
        const auto v = [&](double r) { return phi.value(r); };
        const auto g1 = [&](double r) { return phi.d1(r); };
        const auto g2 = [&](double r) { return phi.d2(r); };
        for (double r0 : probes) {
          CAPTURE(r0);
          CHECK(jump(v, r0, 1e-8) <= 0.2 * jump(v, r0, 1e-7) + 1e-12);
          CHECK(jump(g1, r0, 1e-8) <= 0.2 * jump(g1, r0, 1e-7) + 1e-10);
          CHECK(jump(g2, r0, 1e-8) <= 0.2 * jump(g2, r0, 1e-7) + 1e-8);
        }
        // Derivatives agree with central differences away from the joints.
        for (double r : {1.3, 0.5 * (1 + K), 0.9 * K}) {
          const double h = 1e-5;
          CHECK(phi.d1(r) == doctest::Approx((phi.value(r + h) - phi.value(r - h)) / (2 * h)).epsilon(1e-6));
          CHECK(phi.d2(r) == doctest::Approx((phi.d1(r + h) - phi.d1(r - h)) / (2 * h)).epsilon(1e-5));
        }
      }
    }
  }

  TEST_CASE("cached constants match recomputation") {
    for (int d : {1, 2}) {
      for (double K : {2.0, 4.0, 16.0}) {
        const PlateauFunction phi = build_plateau(d, K);
        CHECK(numeric_grad_norm2(phi) == doctest::Approx(phi.grad_norm2()).epsilon(1e-6));
        double c1 = 0.0, c2 = 0.0;
        for (int i = 0; i <= 200000; ++i) {
          const double r = K * i / 200000.0;
          c1 = std::max(c1, std::abs(phi.d1(r)));
          double h = std::abs(phi.d2(r));
          if (d == 2 && r > 0) h = std::max(h, std::abs(phi.d1(r) / r));
          c2 = std::max(c2, h);
        }
        CHECK(c1 == doctest::Approx(phi.C1()).epsilon(1e-6));
        CHECK(c2 == doctest::Approx(phi.C2()).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("invalid plateaus") {
    CHECK_THROWS_AS(build_plateau(2, 1.05), DomainError);
    CHECK_THROWS_AS(build_plateau(3, 4.0), DomainError);
    CHECK_THROWS_AS(build_plateau(0, 4.0), DomainError);
  }
}

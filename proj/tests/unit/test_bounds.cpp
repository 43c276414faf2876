#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rigidlab/error.hpp"
#include "rigidlab/models.hpp"
#include "rigidlab/plateau.hpp"
#include "rigidlab/variance.hpp"

using namespace rigidlab;
using std::numbers::pi;

// Frozen from tests/oracles/model_oracle.py: 2 pi int r^{k+1} e^{-g r} dr by
// adaptive quadrature, k = 3, 4, 2.
namespace oracle {
struct Gamma {
  double g, C3, C4, C5;
};
constexpr Gamma kGamma[] = {
    {0.5, 4825.48631591392, 48254.8631591392, 603.18578948924},
    {1.0, 150.79644737231, 753.98223686155, 37.6991118430775},
    {2.0, 4.71238898038469, 11.7809724509617, 2.35619449019234},
};
}  // namespace oracle

TEST_SUITE("bounds") {
  TEST_CASE("gamma constants") {
    const GammaConstants one = gamma_constants(1.0);
    CHECK(one.C3 == doctest::Approx(48 * pi).epsilon(1e-8));
    CHECK(one.C4 == doctest::Approx(240 * pi).epsilon(1e-8));
    CHECK(one.C5 == doctest::Approx(12 * pi).epsilon(1e-8));
    CHECK(gamma_constants(2.0).C5 == doctest::Approx(12 * pi / 16).epsilon(1e-8));
    for (const auto& o : oracle::kGamma) {
      const GammaConstants c = gamma_constants(o.g);
      CHECK(c.C3 == doctest::Approx(o.C3).epsilon(1e-8));
      CHECK(c.C4 == doctest::Approx(o.C4).epsilon(1e-8));
      CHECK(c.C5 == doctest::Approx(o.C5).epsilon(1e-8));
    }
    CHECK_THROWS_AS(gamma_constants(0.0), DomainError);
    CHECK_THROWS_AS(gamma_constants(-1.0), DomainError);
  }

  TEST_CASE("exponential bound: remainders scale as 1/R and 1/R^2 and vanish") {
    const PlateauFunction phi = build_plateau(2, 4.0);
    const double C = 0.5, g = 1.5;
    const BoundTerms a = exponential_bound(C, g, phi, 10.0), b = exponential_bound(C, g, phi, 20.0);
    CHECK(a.leading == doctest::Approx(2 * C * gamma_constants(g).C5 * phi.grad_norm2()).epsilon(1e-12));
    CHECK(b.leading == doctest::Approx(a.leading).epsilon(1e-15));
    CHECK(b.order1 == doctest::Approx(a.order1 / 2).epsilon(1e-12));
    CHECK(b.order2 == doctest::Approx(a.order2 / 4).epsilon(1e-12));
    const BoundTerms inf = exponential_bound(C, g, phi, 1e12);
    CHECK(inf.total == doctest::Approx(inf.leading).epsilon(1e-6));
    for (const BoundTerms& t : {a, b, inf}) {
      CHECK(t.leading >= 0);
      CHECK(t.order1 >= 0);
      CHECK(t.order2 >= 0);
      CHECK(t.boundary >= 0);
      CHECK(t.total == doctest::Approx(t.leading + t.order1 + t.order2 + t.boundary).epsilon(1e-15));
    }
  }

  TEST_CASE("power-law bound tends to |B| times the gradient norm") {
    const PlateauFunction phi = build_plateau(2, 4.0);
    const double B = -0.7;
    const BoundTerms inf = power_law_bound(1.0, 5.0, B, phi, 1e12);
    CHECK(inf.total == doctest::Approx(0.7 * phi.grad_norm2()).epsilon(1e-6));
    double prev = INFINITY;
    for (double R : {4.0, 16.0, 64.0, 256.0}) {
      const BoundTerms t = power_law_bound(1.0, 5.0, B, phi, R);
      CHECK(t.boundary >= 0);
      CHECK(t.order1 >= 0);
      CHECK(t.order2 >= 0);
      CHECK(t.total < prev);
      prev = t.total;
    }
    CHECK_THROWS_AS(power_law_bound(1.0, 4.0, B, phi, 8.0), DomainError);
    CHECK_THROWS_AS(power_law_bound(1.0, 3.5, B, phi, 8.0), DomainError);
  }

  TEST_CASE("gaussian envelopes are dominated by the derived exponential") {
    const DecayClass g = DecayClass::gaussian(0.3, 1.0);
    const DecayClass e = exponential_envelope(g);
    CHECK(e.kind == DecayKind::exponential);
    CHECK(e.rate == doctest::Approx(std::sqrt(8.0)));
    for (int i = 0; i <= 2000; ++i) {
      const double r = 0.01 * i;
      CHECK(g.bound(r) <= e.bound(r) * (1 + 1e-12));
    }
    CHECK(exponential_envelope(DecayClass::exponential(2.0, 0.5)).amplitude == 2.0);
    CHECK_THROWS_AS(exponential_envelope(DecayClass::power(1.0, 5.0)), DomainError);
  }

  TEST_CASE("exponential bound dominates the ginibre variance") {
    const auto m = make_ginibre_model();
    const DecayClass env = exponential_envelope(m->decay());
    const PlateauFunction phi = build_plateau(2, 2.0);
    const double v = variance_vls3(*m, ScalarField::plateau(phi, 4.0));
    CHECK(exponential_bound(env.amplitude, env.rate, phi, 4.0).total >= v);
  }

  TEST_CASE("variance report attaches the bound only when it applies") {
    const VarianceReport g = variance_report(*make_ginibre_model(), build_plateau(2, 2.0), 4.0);
    CHECK(g.bound.kind == "exponential");
    CHECK(g.bound.total >= g.vls3);
    const VarianceReport s = variance_report(*make_sine_model(), build_plateau(1, 2.0), 4.0);
    CHECK(s.bound.kind.empty());
    CHECK(g.to_json().contains("vls3"));
  }

  TEST_CASE("limit of the rescaled variance: preconditions") {
    const PlateauFunction phi2 = build_plateau(2, 2.0);
    CHECK_THROWS_AS(rescaled_limit(*builtin_model("poisson", {{"rho", 1.0}}), phi2, {4, 8}), PreconditionError);
    CHECK_THROWS_AS(rescaled_limit(*make_sine_model(), build_plateau(1, 2.0), {4, 8}), DomainError);
    CHECK_THROWS_AS(rescaled_limit(*make_ginibre_model(), phi2, {8, 4}), DomainError);
  }

  TEST_CASE("limit constant comes from the second moment") {
    const RescaledLimit r = rescaled_limit(*make_ginibre_model(), build_plateau(2, 2.0), {4.0, 8.0});
    CHECK(r.second_moment == doctest::Approx(-1.0 / pi).epsilon(1e-8));
    CHECK(r.c_lim == doctest::Approx(1.0 / (4 * pi)).epsilon(1e-8));
    REQUIRE(r.ratios.size() == 2);
    CHECK(r.ratios[1] > r.ratios[0]);
  }
}

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rigidlab/error.hpp"
#include "rigidlab/models.hpp"
#include "rigidlab/plateau.hpp"
#include "rigidlab/simd/kernels.hpp"
#include "rigidlab/variance.hpp"

using namespace rigidlab;

// Frozen values from tests/oracles/plateau_oracle.py: the variance written as
// an integral of |f^(k)|^2 S(k) over wavenumbers, with S the closed-form
// structure factor of each model. No code is shared with the engine.
namespace oracle {
struct Var {
  const char* model;
  double K, R, value;
};
constexpr Var kVars[] = {
    {"ginibre", 2, 4, 0.664116236498},
    {"perturbed_lattice", 2, 4, 2.08638268971},
    {"perturbed_lattice", 4, 4, 1.13912775958},
    {"sine", 2, 4, 0.305949486878},
    {"sine", 4, 4, 0.245449988144},
};
}  // namespace oracle

namespace {

ModelPtr model_by_name(const std::string& name) {
  if (name == "perturbed_lattice") return builtin_model(name, {{"d", 2}, {"sigma", 0.5}});
  return builtin_model(name);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_SUITE("variance") {
  TEST_CASE("both identities reproduce the spectral oracle") {
    for (const auto& o : oracle::kVars) {
      CAPTURE(o.model);
      CAPTURE(o.K);
      const auto m = model_by_name(o.model);
      const VlsValues v = evaluate_vls(*m, ScalarField::plateau(build_plateau(m->dim(), o.K), o.R));
      CHECK(rel(v.vls1, o.value) <= 1e-6);
      CHECK(rel(v.vls3, o.value) <= 1e-6);
      CHECK(v.grid.change_vls3 <= 1e-4);
    }
  }

  TEST_CASE("poisson variance is the squared norm") {
    const auto m = builtin_model("poisson", {{"rho", 1.0}});
    const PlateauFunction phi = build_plateau(2, 4.0);
    const VlsValues v = evaluate_vls(*m, ScalarField::plateau(phi, 3.0));
    CHECK(rel(v.vls1, v.norm2) <= 1e-6);
    CHECK(rel(v.norm2, phi.norm2() * 9.0) <= 1e-6);
    const auto m2 = builtin_model("poisson", {{"rho", 2.5}});
    CHECK(rel(variance_vls1(*m2, ScalarField::plateau(phi, 3.0)), 2.5 * phi.norm2() * 9.0) <= 1e-6);
  }

  TEST_CASE("zero field has zero variance") {
    CHECK(variance_vls1(*make_ginibre_model(), ScalarField::zero(2)) == 0.0);
    CHECK(variance_vls3(*make_ginibre_model(), ScalarField::zero(2)) == 0.0);
  }

  TEST_CASE("constant field has zero vls3 variance") {
    CHECK(variance_vls3(*make_ginibre_model(), ScalarField::constant(2, 3.0)) == 0.0);
    CHECK(variance_vls3(*make_sine_model(), ScalarField::constant(1, -1.0)) == 0.0);
  }

  TEST_CASE("vls3 rejects models that are not superhomogeneous") {
    const auto m = builtin_model("poisson", {{"rho", 1.0}});
    const auto f = ScalarField::plateau(build_plateau(2, 2.0), 2.0);
    try {
      (void)variance_vls3(*m, f);
      FAIL("expected a precondition error");
    } catch (const PreconditionError& e) {
      CHECK(e.value() == doctest::Approx(1.0));
    }
  }

  TEST_CASE("ginibre plateau K=4 R=8: vls1 equals vls3") {
    const auto m = make_ginibre_model();
    const VlsValues v = evaluate_vls(*m, ScalarField::plateau(build_plateau(2, 4.0), 8.0));
    CHECK(rel(v.vls1, v.vls3) <= 1e-6);
  }

  TEST_CASE("sine plateau K=8 R=8: positive and both identities agree") {
    const auto m = make_sine_model();
    const VlsValues v = evaluate_vls(*m, ScalarField::plateau(build_plateau(1, 8.0), 8.0));
    CHECK(v.vls3 > 0.0);
    CHECK(rel(v.vls1, v.vls3) <= 1e-6);
  }

  TEST_CASE("general and radial descriptions of the same field agree") {
    const auto m = make_perturbed_lattice_model(2, GaussianDisplacement{0.5});
    const auto bump = [](double r) { return r < 3.0 ? std::pow(1.0 - (r * r) / 9.0, 4) : 0.0; };
    const auto radial = ScalarField::radial(2, 3.0, bump, 0.5);
    const auto general = ScalarField::general(2, 3.0, [&](const Point& x) { return bump(x.norm()); });
    GridOptions o;
    o.delta = 0.05;
    const VlsValues a = evaluate_vls(*m, radial, o), b = evaluate_vls(*m, general, o);
    CHECK(rel(a.vls1, b.vls1) <= 1e-6);
    CHECK(rel(a.vls3, b.vls3) <= 1e-6);
  }

  TEST_CASE("variance is non-negative across random plateaus") {
    const auto m = make_perturbed_lattice_model(1, GaussianDisplacement{0.25});
    for (double K : {1.5, 3.0, 7.0}) {
      for (double R : {1.0, 2.5, 6.0}) {
        const VlsValues v = evaluate_vls(*m, ScalarField::plateau(build_plateau(1, K), R));
        CHECK(v.vls1 >= -1e-6);
        CHECK(v.vls3 >= -1e-6);
        CHECK(rel(v.vls1, v.vls3) <= 1e-6);
      }
    }
  }

  TEST_CASE("an unattainable tolerance on a fixed grid raises a tolerance error") {
    GridOptions o;
    o.delta = 0.25;
    o.tolerance = 1e-15;
    CHECK_THROWS_AS(evaluate_vls(*make_ginibre_model(), ScalarField::plateau(build_plateau(2, 2.0), 4.0), o),
                    ToleranceError);
  }

  TEST_CASE("grid diagnostics are recorded") {
    const VlsValues v = evaluate_vls(*make_sine_model(), ScalarField::plateau(build_plateau(1, 2.0), 4.0));
    CHECK(v.grid.delta > 0.0);
    CHECK(v.grid.cells_per_axis > 0);
    CHECK(v.grid.change_vls3 <= 1e-4);
    const auto j = v.grid.to_json();
    CHECK(j.contains("delta"));
    CHECK(j.contains("change_vls3"));
  }

  TEST_CASE("scalar and vector kernels give the same variance") {
    const simd::Backend before = simd::active_backend();
    const auto m = make_ginibre_model();
    const auto f = ScalarField::plateau(build_plateau(2, 2.0), 4.0);
    GridOptions o;
    o.delta = 0.1;
    o.check_convergence = false;  // same fixed grid for both backends
    simd::force_backend(simd::Backend::scalar);
    const VlsValues a = evaluate_vls(*m, f, o);
    simd::force_backend(before);
    const VlsValues b = evaluate_vls(*m, f, o);
    CHECK(rel(a.vls1, b.vls1) <= 1e-12);
    CHECK(rel(a.vls3, b.vls3) <= 1e-12);
  }
}

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rigidlab/core.hpp"
#include "rigidlab/error.hpp"
#include "rigidlab/samplers.hpp"

using namespace rigidlab;

TEST_SUITE("samplers") {
  TEST_CASE("poisson mean count over seeds") {
    const SimulationBox box(2, 50.0);
    const int seeds = 1000;
    double sum = 0.0;
    for (int s = 0; s < seeds; ++s) sum += static_cast<double>(sample_poisson(box, 1.0, {1, std::uint64_t(s)}).size());
    const double mean = sum / seeds;
    CHECK(std::abs(mean - 2500.0) <= 3.0 * std::sqrt(2500.0 / seeds));
  }

  TEST_CASE("same seed reproduces the configuration") {
    const SimulationBox box(2, 20.0);
    CHECK(sample_poisson(box, 1.5, {5, 2}) == sample_poisson(box, 1.5, {5, 2}));
    CHECK(sample_perturbed_lattice(box, GaussianDisplacement{0.3}, {5, 2}) ==
          sample_perturbed_lattice(box, GaussianDisplacement{0.3}, {5, 2}));
  }

  TEST_CASE("zero perturbation gives the exact lattice") {
    const SimulationBox box(2, 6.0);
    const PointConfiguration c = sample_perturbed_lattice(box, GaussianDisplacement{0.0}, {1, 0});
    REQUIRE(c.size() == 36);
    std::vector<int> seen(36, 0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const Point p = c.point(i);
      CHECK(p[0] == std::round(p[0]));
      CHECK(p[1] == std::round(p[1]));
      ++seen[static_cast<std::size_t>(p[0] * 6 + p[1])];
    }
    for (int v : seen) CHECK(v == 1);
  }

  TEST_CASE("perturbed lattice preserves the point count") {
    const SimulationBox box(2, 10.0);
    const RadialTable table = RadialTable::normalized(2, {0.0, 0.5, 1.5}, {1.0, 1.0, 0.0});
    for (std::uint64_t s = 0; s < 20; ++s) {
      CHECK(sample_perturbed_lattice(box, GaussianDisplacement{0.7}, {s, 0}).size() == 100);
      CHECK(sample_perturbed_lattice(box, table, {s, 0}).size() == 100);
    }
  }

  TEST_CASE("sampler domain errors") {
    CHECK_THROWS_AS(sample_poisson(SimulationBox(2, 5.0), 0.0, {}), DomainError);
    CHECK_THROWS_AS(sample_poisson(SimulationBox(2, 5.0), -1.0, {}), DomainError);
    CHECK_THROWS_AS(sample_perturbed_lattice(SimulationBox(2, 5.5), GaussianDisplacement{0.1}, {}), DomainError);
    CHECK_THROWS_AS(validate(GaussianDisplacement{-0.1}, 2), DomainError);
    CHECK_THROWS_AS(validate(RadialTable(2, {0.0, 1.0}, {1.0, 1.0}), 2), DomainError);  // mass pi, not 1
    CHECK_THROWS_AS(RadialTable(2, {0.0, 1.0}, {1.0, -1.0}), DomainError);
  }

  TEST_CASE("radial table normalisation and inverse cdf") {
    for (int d = 1; d <= 3; ++d) {
      const RadialTable t = RadialTable::normalized(d, {0.0, 0.4, 1.0, 2.0}, {2.0, 1.0, 0.5, 0.0});
      CHECK(t.mass() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK_NOTHROW(validate(t, d));
      for (double u : {0.0, 0.1, 0.37, 0.5, 0.9, 0.999}) {
        CHECK(t.radial_cdf(t.radial_quantile(u)) == doctest::Approx(u).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("radial table displacements follow the radial law") {
    const RadialTable t = RadialTable::normalized(2, {0.0, 1.0}, {1.0, 1.0});  // uniform disc
    Engine eng = make_engine({3, 0});
    const int n = 20000;
    int inside_half = 0;
    for (int i = 0; i < n; ++i) {
      const Point v = draw_displacement(t, 2, eng);
      CHECK(v.norm() <= 1.0 + 1e-12);
      if (v.norm() <= 0.5) ++inside_half;
    }
    const double p = 0.25;
    CHECK(std::abs(inside_half / double(n) - p) <= 4.0 * std::sqrt(p * (1 - p) / n));
  }

  TEST_CASE("gaussian displacements have variance sigma^2 per axis") {
    Engine eng = make_engine({4, 0});
    const double sigma = 0.5;
    const int n = 40000;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) s2 += draw_displacement(GaussianDisplacement{sigma}, 3, eng).norm2();
    const double per_axis = s2 / (3.0 * n);
    CHECK(per_axis == doctest::Approx(sigma * sigma).epsilon(0.03));
  }

  TEST_CASE("sample batch streams") {
    const SamplerModelSpec spec{PerturbedLatticeSpec{GaussianDisplacement{0.4}}, SimulationBox(2, 8.0)};
    const auto one = sample_batch(spec, 1, {21, 0});
    REQUIRE(one.size() == 1);
    CHECK(one[0] == sample(spec, {21, 0}));
    const auto two = sample_batch(spec, 2, {21, 0});
    CHECK_FALSE(two[0] == two[1]);
    CHECK(two[1] == sample(spec, {21, 1}));
  }

  TEST_CASE("poisson batch dispersion") {
    const SamplerModelSpec spec{PoissonSpec{1.0}, SimulationBox(2, 20.0)};
    const auto batch = sample_batch(spec, 1000, {2024, 0});
    double sum = 0.0, sum2 = 0.0;
    for (const auto& c : batch) {
      const double n = static_cast<double>(c.size());
      sum += n;
      sum2 += n * n;
    }
    const double mean = sum / 1000.0;
    const double var = (sum2 - 1000.0 * mean * mean) / 999.0;
    CHECK(var / mean >= 0.9);
    CHECK(var / mean <= 1.1);
  }

  TEST_CASE("every sampled coordinate lies in [0, L)") {
    for (int d = 1; d <= 3; ++d) {
      const SimulationBox box(d, 5.0);
      for (const auto& c : {sample_poisson(box, 2.0, {1, 0}),
                            sample_perturbed_lattice(box, GaussianDisplacement{3.0}, {1, 0})}) {
        for (int a = 0; a < d; ++a) {
          for (double x : c.axis(a)) {
            CHECK(x >= 0.0);
            CHECK(x < 5.0);
          }
        }
      }
    }
  }

  TEST_CASE("unit sphere areas") {
    CHECK(unit_sphere_area(1) == 2.0);
    CHECK(unit_sphere_area(2) == doctest::Approx(2 * std::numbers::pi));
    CHECK(unit_sphere_area(3) == doctest::Approx(4 * std::numbers::pi));
  }
}

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rigidlab/error.hpp"
#include "rigidlab/estimators.hpp"
#include "rigidlab/models.hpp"
#include "rigidlab/samplers.hpp"

using namespace rigidlab;
using std::numbers::pi;

namespace {

std::vector<PointConfiguration> poisson_batch(double L, std::size_t n, std::uint64_t seed) {
  return sample_batch({PoissonSpec{1.0}, SimulationBox(2, L)}, n, {seed, 0});
}

std::vector<PointConfiguration> lattice_batch(double L, double sigma, std::size_t n, std::uint64_t seed) {
  return sample_batch({PerturbedLatticeSpec{GaussianDisplacement{sigma}}, SimulationBox(2, L)}, n, {seed, 0});
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("poisson number variance equals the mean") {
    const auto samples = poisson_batch(24.0, 10000, 1);
    const VarianceCurve c = number_variance_curve(samples, {8.0}, {true, {2, 0}});
    const double ratio = c.var_count[0] / (pi * 64.0);
    CHECK(ratio >= 0.85);
    CHECK(ratio <= 1.15);
    CHECK(c.mean_count[0] == doctest::Approx(pi * 64.0).epsilon(0.02));
  }

  TEST_CASE("perturbed lattice variance is sub-volume") {
    const auto samples = lattice_batch(48.0, 0.5, 200, 3);
    const VarianceCurve c = number_variance_curve(samples, {16.0}, {true, {4, 0}});
    CHECK(c.var_count[0] / (pi * 256.0) < 0.25);
  }

  TEST_CASE("empty configurations give a zero curve") {
    std::vector<PointConfiguration> empty(150, PointConfiguration(SimulationBox(2, 30.0)));
    const VarianceCurve c = number_variance_curve(empty, {1.0, 2.0, 4.0, 8.0});
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(c.mean_count[k] == 0.0);
      CHECK(c.var_count[k] == 0.0);
    }
    CHECK_THROWS_AS(growth_exponent(c), DegenerateFitError);
  }

  TEST_CASE("curve preconditions") {
    const auto one = poisson_batch(30.0, 1, 5);
    CHECK_THROWS_AS(number_variance_curve(one, {1.0}), DomainError);
    const auto few = poisson_batch(30.0, 50, 5);
    CHECK_THROWS_AS(number_variance_curve(few, {1.0}), PreconditionError);
    const auto many = poisson_batch(30.0, 100, 5);
    CHECK_THROWS_AS(number_variance_curve(many, {2.0, 1.0}), DomainError);
    CHECK_THROWS_AS(number_variance_curve(many, {11.0}), DomainError);  // 3R > L
  }

  TEST_CASE("growth fit on an exact power law") {
    VarianceCurve c;
    c.dim = 2;
    c.radii = {2, 4, 8, 16, 32};
    for (double R : c.radii) {
      c.var_count.push_back(std::pow(R, 1.5));
      c.mean_count.push_back(R * R);
      c.ci_halfwidth.push_back(0.0);
    }
    const GrowthFit f = growth_exponent(c);
    CHECK(f.slope == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(f.stderr_slope <= 1e-10);
    CHECK(f.superhomogeneous_consistent);
    c.radii = {2, 3, 4, 5};
    CHECK_THROWS_AS(growth_exponent(c), DomainError);  // span < 4x
  }

  TEST_CASE("growth exponents of poisson and the perturbed lattice") {
    const std::vector<double> radii{1, 2, 4, 8};
    const GrowthFit p = growth_exponent(number_variance_curve(poisson_batch(24.0, 1000, 6), radii, {true, {6, 0}}));
    CHECK(p.slope == doctest::Approx(2.0).epsilon(0.1 / 2.0));
    CHECK_FALSE(p.superhomogeneous_consistent);
    const GrowthFit l =
        growth_exponent(number_variance_curve(lattice_batch(24.0, 0.5, 1000, 7), radii, {true, {7, 0}}));
    CHECK(std::abs(l.slope - 1.0) <= 0.2);
    CHECK(l.superhomogeneous_consistent);
  }

  TEST_CASE("two points at distance one give two ordered pairs") {
    PointConfiguration c(SimulationBox(2, 10.0));
    c.add({2.0, 2.0});
    c.add({3.0, 2.0});
    const auto est = pair_correlation_hist({c, c}, std::vector<double>{0.9, 1.1});
    REQUIRE(est.pair_counts.size() == 1);
    CHECK(est.pair_counts[0] == 4.0);  // 2 ordered pairs in each of 2 replicas
    const auto single = pair_correlation_hist({c}, std::vector<double>{0.9, 1.1});
    CHECK(single.pair_counts[0] == 2.0);
  }

  TEST_CASE("pair correlation: poisson is uncorrelated") {
    const auto samples = poisson_batch(20.0, 400, 8);
    const auto est = pair_correlation_hist(samples, 0.25, 4.0, {200, {9, 0}});
    REQUIRE(est.rho_tr_hat.size() == 16);
    int inside = 0;
    for (std::size_t k = 0; k < est.rho_tr_hat.size(); ++k) {
      if (std::abs(est.rho_tr_hat[k]) <= 3.0 * est.stderr[k]) ++inside;
    }
    CHECK(inside == 16);
  }

  TEST_CASE("pair correlation: perturbed lattice matches the analytic curve") {
    const auto samples = lattice_batch(32.0, 0.5, 300, 10);
    const auto model = make_perturbed_lattice_model(2, GaussianDisplacement{0.5});
    const auto est = pair_correlation_hist(samples, 0.2, 4.0, {200, {11, 0}});
    int inside = 0;
    const int n = static_cast<int>(est.rho_tr_hat.size());
    for (int k = 0; k < n; ++k) {
      // Bin average of the analytic curve over the annulus.
      const double a = est.bin_edges[k], b = est.bin_edges[k + 1];
      double num = 0.0, den = 0.0;
      for (int i = 0; i < 200; ++i) {
        const double r = a + (b - a) * (i + 0.5) / 200.0;
        num += model->rho_tr_bar(r) * r;
        den += r;
      }
      if (std::abs(est.rho_tr_hat[k] - num / den) <= 3.0 * est.stderr[k]) ++inside;
    }
    CHECK(inside >= static_cast<int>(std::ceil(0.95 * n)));
  }

  TEST_CASE("pair correlation preconditions and brute-force agreement") {
    const auto samples = poisson_batch(8.0, 3, 12);
    CHECK_THROWS_AS(pair_correlation_hist(samples, 0.1, 4.5), DomainError);
    // L = 8 with r_max = 2.5 uses the cell list; r_max = 4 falls back to brute force.
    const auto a = pair_correlation_hist(samples, std::vector<double>{0.0, 1.0, 2.0, 2.5});
    const auto b = pair_correlation_hist(samples, std::vector<double>{0.0, 1.0, 2.0, 2.5, 4.0});
    for (int k = 0; k < 3; ++k) CHECK(a.pair_counts[k] == b.pair_counts[k]);
    std::vector<double> brute(3, 0.0);
    for (const auto& c : samples) {
      for (std::size_t i = 0; i < c.size(); ++i) {
        for (std::size_t j = 0; j < c.size(); ++j) {
          if (i == j) continue;
          const double r = torus_distance(c.point(i), c.point(j), c.box());
          if (r < 1.0) brute[0] += 1;
          else if (r < 2.0) brute[1] += 1;
          else if (r < 2.5) brute[2] += 1;
        }
      }
    }
    for (int k = 0; k < 3; ++k) CHECK(a.pair_counts[k] == brute[k]);
  }

  TEST_CASE("linear statistics") {
    const auto lat = lattice_batch(16.0, 0.5, 100, 13);
    const auto c = linear_statistic_variance(lat, [](const Point&) { return 3.0; });
    CHECK(c.variance == 0.0);
    CHECK(c.mean == doctest::Approx(3.0 * 256.0));

    const auto poi = poisson_batch(50.0, 400, 14);
    const auto n = linear_statistic_variance(poi, [](const Point&) { return 1.0; });
    CHECK(std::abs(n.variance - 2500.0) <= n.ci_halfwidth);
    CHECK(n.batches >= 20);

    CHECK_THROWS_AS(linear_statistic_variance({poi[0]}, [](const Point&) { return 1.0; }), DomainError);
  }

  TEST_CASE("jittered windows are reproducible and seed dependent") {
    const auto samples = poisson_batch(24.0, 200, 15);
    const auto a = number_variance_curve(samples, {2.0, 4.0}, {true, {1, 0}});
    const auto b = number_variance_curve(samples, {2.0, 4.0}, {true, {1, 0}});
    const auto c = number_variance_curve(samples, {2.0, 4.0}, {true, {2, 0}});
    CHECK(a.var_count == b.var_count);
    CHECK(a.var_count != c.var_count);
  }
}

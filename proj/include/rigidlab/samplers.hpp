#pragma once

// Seeded Monte Carlo samplers: homogeneous Poisson and i.i.d.-perturbed
// integer lattices on the periodic box.

#include <variant>
#include <vector>

#include "rigidlab/core.hpp"

namespace rigidlab {

/// Per-axis i.i.d. N(0, sigma^2) displacement. sigma = 0 leaves the lattice
/// unperturbed.
struct GaussianDisplacement {
  double sigma = 0.0;
};

/// Isotropic displacement density h(x) = h(|x|) in R^d given by linear
/// interpolation of (radii[k], density[k]) and zero past the last radius.
class RadialTable {
 public:
  RadialTable(int dim, std::vector<double> radii, std::vector<double> density);

  /// Same shape, rescaled so that the total mass is exactly one.
  static RadialTable normalized(int dim, std::vector<double> radii, std::vector<double> density);

  int dim() const noexcept { return dim_; }
  const std::vector<double>& radii() const noexcept { return r_; }
  const std::vector<double>& density() const noexcept { return h_; }
  double support() const noexcept { return r_.back(); }

  double operator()(double r) const noexcept;
  /// Integral of h over R^d.
  double mass() const noexcept { return cum_.back(); }
  /// P(|xi| <= r).
  double radial_cdf(double r) const noexcept;
  /// Inverse of radial_cdf for u in [0, 1).
  double radial_quantile(double u) const noexcept;

 private:
  double segment_mass(std::size_t k, double x) const noexcept;

  int dim_;
  std::vector<double> r_, h_, cum_;
};

using PerturbationSpec = std::variant<GaussianDisplacement, RadialTable>;

/// Throws DomainError unless h >= 0 and integrates to one within 1e-9.
void validate(const PerturbationSpec& h, int dim);

struct PoissonSpec {
  double rho = 1.0;
};

struct PerturbedLatticeSpec {
  PerturbationSpec h;
};

struct SamplerModelSpec {
  std::variant<PoissonSpec, PerturbedLatticeSpec> kind;
  SimulationBox box;
};

PointConfiguration sample_poisson(const SimulationBox& box, double rho, Seed seed);
PointConfiguration sample_perturbed_lattice(const SimulationBox& box, const PerturbationSpec& h, Seed seed);
PointConfiguration sample(const SamplerModelSpec& spec, Seed seed);

/// Replica i is drawn from Seed{seed.value, i}.
std::vector<PointConfiguration> sample_batch(const SamplerModelSpec& spec, std::size_t replicas, Seed seed);

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
double uniform01(Engine& eng) noexcept;

/// Draws one displacement vector from h.
Point draw_displacement(const PerturbationSpec& h, int dim, Engine& eng);

/// Surface area of the unit sphere in R^d (2, 2 pi, 4 pi).
double unit_sphere_area(int dim) noexcept;

}  // namespace rigidlab

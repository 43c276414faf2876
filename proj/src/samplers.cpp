#include "rigidlab/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "rigidlab/error.hpp"
#include "rigidlab/parallel.hpp"

namespace rigidlab {

double unit_sphere_area(int dim) noexcept {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    default: return 4.0 * std::numbers::pi;
  }
}

double uniform01(Engine& eng) noexcept { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

RadialTable::RadialTable(int dim, std::vector<double> radii, std::vector<double> density)
    : dim_(dim), r_(std::move(radii)), h_(std::move(density)) {
  if (dim < 1 || dim > kMaxDim) throw DomainError("radial table dimension must be 1, 2 or 3");
  if (r_.size() < 2 || r_.size() != h_.size())
    throw DomainError("radial table needs at least two (radius, density) pairs of equal length");
  if (r_.front() != 0.0) throw DomainError("radial table must start at r = 0");
  for (std::size_t k = 0; k < r_.size(); ++k) {
    if (!std::isfinite(r_[k]) || !std::isfinite(h_[k])) throw DomainError("radial table entries must be finite");
    if (h_[k] < 0.0) throw DomainError(fmt::format("radial table density is negative at r = {}", r_[k]));
    if (k > 0 && !(r_[k] > r_[k - 1])) throw DomainError("radial table radii must be strictly increasing");
  }
  cum_.assign(r_.size(), 0.0);
  for (std::size_t k = 0; k + 1 < r_.size(); ++k) cum_[k + 1] = cum_[k] + segment_mass(k, r_[k + 1]);
}

RadialTable RadialTable::normalized(int dim, std::vector<double> radii, std::vector<double> density) {
  RadialTable t(dim, radii, density);
  if (!(t.mass() > 0.0)) throw DomainError("radial table has zero mass");
  for (double& h : density) h /= t.mass();
  return RadialTable(dim, std::move(radii), std::move(density));
}

// Mass of h over the shell r_k <= |x| <= x for x in segment k: h is
// alpha + m r there, integrated against |S^{d-1}| r^{d-1} dr.
double RadialTable::segment_mass(std::size_t k, double x) const noexcept {
  const double r0 = r_[k], r1 = r_[k + 1];
  const double m = (h_[k + 1] - h_[k]) / (r1 - r0);
  const double alpha = h_[k] - m * r0;
  const double d = dim_;
  auto prim = [&](double r) { return alpha * std::pow(r, d) / d + m * std::pow(r, d + 1) / (d + 1); };
  return unit_sphere_area(dim_) * (prim(x) - prim(r0));
}

double RadialTable::operator()(double r) const noexcept {
  r = std::abs(r);
  if (r >= r_.back()) return r == r_.back() ? h_.back() : 0.0;
  const auto it = std::upper_bound(r_.begin(), r_.end(), r);
  const std::size_t k = static_cast<std::size_t>(it - r_.begin()) - 1;
  const double t = (r - r_[k]) / (r_[k + 1] - r_[k]);
  return h_[k] + t * (h_[k + 1] - h_[k]);
}

double RadialTable::radial_cdf(double r) const noexcept {
  if (r <= 0.0) return 0.0;
  if (r >= r_.back()) return 1.0;
  const auto it = std::upper_bound(r_.begin(), r_.end(), r);
  const std::size_t k = static_cast<std::size_t>(it - r_.begin()) - 1;
  return (cum_[k] + segment_mass(k, r)) / mass();
}

double RadialTable::radial_quantile(double u) const noexcept {
  const double target = std::clamp(u, 0.0, 1.0) * mass();
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
  if (it == cum_.end()) return r_.back();
  const std::size_t k = static_cast<std::size_t>(it - cum_.begin()) - 1;
  double lo = r_[k], hi = r_[k + 1];
  for (int iter = 0; iter < 64 && hi - lo > 0.0; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (cum_[k] + segment_mass(k, mid) < target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

void validate(const PerturbationSpec& h, int dim) {
  if (const auto* g = std::get_if<GaussianDisplacement>(&h)) {
    if (!(g->sigma >= 0.0) || !std::isfinite(g->sigma))
      throw DomainError(fmt::format("gaussian sigma must be >= 0 (got {})", g->sigma));
    return;
  }
  const auto& t = std::get<RadialTable>(h);
  if (t.dim() != dim) throw DomainError(fmt::format("radial table is for d={}, box has d={}", t.dim(), dim));
  if (std::abs(t.mass() - 1.0) > 1e-9)
    throw DomainError(fmt::format("radial table integrates to {:.12g}, expected 1 within 1e-9", t.mass()));
}

PointConfiguration sample_poisson(const SimulationBox& box, double rho, Seed seed) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError(fmt::format("Poisson intensity must be > 0 (got {})", rho));
  Engine eng = make_engine(seed);
  std::poisson_distribution<long long> count(rho * box.volume());
  const auto n = static_cast<std::size_t>(count(eng));
  PointConfiguration out(box);
  out.reserve(n);
  const double L = box.side();
  Point p(box.dim());
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < box.dim(); ++a) p[a] = std::min(uniform01(eng) * L, std::nextafter(L, 0.0));
    out.add_unchecked(p);
  }
  return out;
}

Point draw_displacement(const PerturbationSpec& h, int dim, Engine& eng) {
  Point xi(dim);
  if (const auto* g = std::get_if<GaussianDisplacement>(&h)) {
    if (g->sigma == 0.0) return xi;
    std::normal_distribution<double> n(0.0, g->sigma);
    for (int a = 0; a < dim; ++a) xi[a] = n(eng);
    return xi;
  }
  const auto& t = std::get<RadialTable>(h);
  const double r = t.radial_quantile(uniform01(eng));
  if (dim == 1) {
    xi[0] = (eng() >> 63) != 0 ? r : -r;
  } else if (dim == 2) {
    const double phi = 2.0 * std::numbers::pi * uniform01(eng);
    xi[0] = r * std::cos(phi);
    xi[1] = r * std::sin(phi);
  } else {
    std::normal_distribution<double> n(0.0, 1.0);
    double s = 0.0;
    do {
      for (int a = 0; a < 3; ++a) xi[a] = n(eng);
      s = xi.norm();
    } while (s == 0.0);
    for (int a = 0; a < 3; ++a) xi[a] *= r / s;
  }
  return xi;
}

PointConfiguration sample_perturbed_lattice(const SimulationBox& box, const PerturbationSpec& h, Seed seed) {
  const double L = box.side();
  if (std::abs(L - std::round(L)) > 1e-12)
    throw DomainError(fmt::format("perturbed lattice needs an integer box side (got {})", L));
  validate(h, box.dim());
  const auto n = static_cast<long long>(std::round(L));
  const int d = box.dim();
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(n);

  Engine eng = make_engine(seed);
  PointConfiguration out(box);
  out.reserve(total);
  long long idx[kMaxDim] = {0, 0, 0};
  Point p(d);
  for (std::size_t i = 0; i < total; ++i) {
    const Point xi = draw_displacement(h, d, eng);
    for (int a = 0; a < d; ++a) p[a] = wrap_coordinate(static_cast<double>(idx[a]) + xi[a], L);
    out.add_unchecked(p);
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[a] < n) break;
      idx[a] = 0;
    }
  }
  return out;
}

PointConfiguration sample(const SamplerModelSpec& spec, Seed seed) {
  if (const auto* p = std::get_if<PoissonSpec>(&spec.kind)) return sample_poisson(spec.box, p->rho, seed);
  return sample_perturbed_lattice(spec.box, std::get<PerturbedLatticeSpec>(spec.kind).h, seed);
}

std::vector<PointConfiguration> sample_batch(const SamplerModelSpec& spec, std::size_t replicas, Seed seed) {
  if (replicas < 1) throw DomainError("replicas must be >= 1");
  std::vector<PointConfiguration> out(replicas, PointConfiguration(spec.box));
  parallel::for_each_index(replicas, [&](std::size_t i) { out[i] = sample(spec, Seed{seed.value, i}); });
  return out;
}

}  // namespace rigidlab

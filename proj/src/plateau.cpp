#include "rigidlab/plateau.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "quad.hpp"
#include "rigidlab/error.hpp"

namespace rigidlab {

namespace {

constexpr double W = PlateauFunction::kBlend;

double s5(double t) noexcept { return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t); }
double s5p(double t) noexcept { return 30.0 * t * t * (1.0 - t) * (1.0 - t); }
double s5pp(double t) noexcept { return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t); }

struct Jet {
  double v, d1, d2;
};

// log-radius ramp in t = ln r / ln K
Jet log_ramp(double t) noexcept {
  if (t <= 0.0) return {1.0, 0.0, 0.0};
  if (t >= 1.0) return {0.0, 0.0, 0.0};
  if (t < W) {
    const double u = t / W;
    return {1.0 - s5(u) * t, -(s5p(u) / W * t + s5(u)), -(s5pp(u) / (W * W) * t + 2.0 * s5p(u) / W)};
  }
  if (t <= 1.0 - W) return {1.0 - t, -1.0, 0.0};
  const double u = (t - 1.0 + W) / W;
  const double g = 1.0 - s5(u), gp = -s5p(u) / W, gpp = -s5pp(u) / (W * W);
  return {g * (1.0 - t), gp * (1.0 - t) - g, gpp * (1.0 - t) - 2.0 * gp};
}

// Maximum of g over [a, b]: dense scan, then golden-section polish.
template <class G>
double sup_on(G&& g, double a, double b) {
  const int n = 4000;
  double best = 0.0, arg = a;
  for (int i = 0; i <= n; ++i) {
    const double x = a + (b - a) * i / n;
    const double v = g(x);
    if (v > best) {
      best = v;
      arg = x;
    }
  }
  double lo = std::max(a, arg - (b - a) / n), hi = std::min(b, arg + (b - a) / n);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100; ++it) {
    const double m1 = hi - phi * (hi - lo), m2 = lo + phi * (hi - lo);
    if (g(m1) < g(m2)) lo = m1;
    else hi = m2;
  }
  return std::max(best, g(0.5 * (lo + hi)));
}

}  // namespace

PlateauFunction::PlateauFunction(int dim, double K) : dim_(dim), K_(K), logK_(std::log(K)) {
  if (dim != 1 && dim != 2) throw DomainError(fmt::format("plateau functions exist for d = 1, 2 (got {})", dim));
  if (!(K >= kMinK) || !std::isfinite(K))
    throw DomainError(fmt::format("plateau support K = {} is below the minimum {} for the smoothing margin", K, kMinK));

  if (dim == 1) {
    const auto cuts = joints();
    norm2_ = 2.0 + 2.0 * quad::panels([&](double r) { return value(r) * value(r); }, 1.0, K, 0.05, cuts);
    grad_norm2_ = 2.0 * quad::panels([&](double r) { return d1(r) * d1(r); }, 1.0, K, 0.05, cuts);
  } else {
    // substitute r = K^t so the log ramp is resolved uniformly for every K
    const std::vector<double> cuts{W, 1.0 - W};
    const double two_pi = 2.0 * std::numbers::pi;
    auto jac = [&](double t) {
      const double r = std::exp(t * logK_);
      return std::pair{r, r * r * logK_};
    };
    norm2_ = std::numbers::pi + two_pi * quad::panels(
                                             [&](double t) {
                                               const auto [r, w] = jac(t);
                                               return value(r) * value(r) * w;
                                             },
                                             0.0, 1.0, 0.002, cuts);
    grad_norm2_ = two_pi * quad::panels(
                               [&](double t) {
                                 const auto [r, w] = jac(t);
                                 return d1(r) * d1(r) * w;
                               },
                               0.0, 1.0, 0.002, cuts);
  }

  if (dim == 1) {
    c1_ = sup_on([&](double r) { return std::abs(d1(r)); }, 1.0, K);
    c2_ = sup_on([&](double r) { return std::abs(d2(r)); }, 1.0, K);
  } else {
    // scan in t = ln r / ln K where the profile is uniform
    auto in_t = [&](auto&& g) { return [&, g](double t) { return g(std::exp(t * logK_)); }; };
    c1_ = sup_on(in_t([&](double r) { return std::abs(d1(r)); }), 0.0, 1.0);
    c2_ = sup_on(in_t([&](double r) { return hessian_norm(r); }), 0.0, 1.0);
  }
}

std::vector<double> PlateauFunction::joints() const {
  if (dim_ == 1) return {1.0, K_};
  return {1.0, std::exp(W * logK_), std::exp((1.0 - W) * logK_), K_};
}

double PlateauFunction::value(double r) const noexcept {
  r = std::abs(r);
  if (r <= 1.0) return 1.0;
  if (r >= K_) return 0.0;
  if (dim_ == 1) return 1.0 - s5((r - 1.0) / (K_ - 1.0));
  return log_ramp(std::log(r) / logK_).v;
}

double PlateauFunction::d1(double r) const noexcept {
  r = std::abs(r);
  if (r <= 1.0 || r >= K_) return 0.0;
  if (dim_ == 1) return -s5p((r - 1.0) / (K_ - 1.0)) / (K_ - 1.0);
  return log_ramp(std::log(r) / logK_).d1 / (r * logK_);
}

double PlateauFunction::d2(double r) const noexcept {
  r = std::abs(r);
  if (r <= 1.0 || r >= K_) return 0.0;
  if (dim_ == 1) return -s5pp((r - 1.0) / (K_ - 1.0)) / ((K_ - 1.0) * (K_ - 1.0));
  const Jet j = log_ramp(std::log(r) / logK_);
  return (j.d2 / logK_ - j.d1) / (r * r * logK_);
}

double PlateauFunction::hessian_norm(double r) const noexcept {
  if (dim_ == 1) return std::abs(d2(r));
  return std::max(std::abs(d2(r)), std::abs(d1(r)) / r);
}

nlohmann::json PlateauFunction::to_json() const {
  return {{"d", dim_},           {"K", K_},   {"blend", kBlend}, {"norm2", norm2_},
          {"grad_norm2", grad_norm2_}, {"C1", c1_}, {"C2", c2_}};
}

PlateauFunction build_plateau(int dim, double K) { return PlateauFunction(dim, K); }

double unsmoothed_grad_norm2(int dim, double K) {
  return dim == 1 ? 2.0 / (K - 1.0) : 2.0 * std::numbers::pi / std::log(K);
}

}  // namespace rigidlab

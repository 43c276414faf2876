#pragma once

// Fixed-order quadrature helpers shared by the model and variance code.
// Everything here is deterministic: no adaptive refinement whose path could
// depend on thread scheduling.

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "rigidlab/models.hpp"

namespace rigidlab::quad {

/// Integral of f over [a, b] with 20-point Gauss-Legendre on panels no wider
/// than `width`, breaking additionally at every point of `cuts` inside (a, b).
template <class F>
double panels(F&& f, double a, double b, double width, const std::vector<double>& cuts = {}) {
  if (!(b > a)) return 0.0;
  std::vector<double> pts{a};
  for (double c : cuts)
    if (c > a && c < b) pts.push_back(c);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const double lo = pts[s], hi = pts[s + 1];
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / width)));
    const double h = (hi - lo) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x0 = lo + h * static_cast<double>(i);
      const double x1 = (i + 1 == n) ? hi : x0 + h;
      total += boost::math::quadrature::gauss<double, 20>::integrate(f, x0, x1);
    }
  }
  return total;
}

/// Integral of f over [T, infinity) for smooth, monotonically decaying f.
template <class F>
TailIntegral half_line(F&& f, double T) {
  boost::math::quadrature::exp_sinh<double> integrator;
  double err = 0.0, l1 = 0.0;
  const double v = integrator.integrate(
      [&](double t) {
        const double v = f(T + t);
        // pow(r, k) * exp(-r^2) overflows to inf * 0 far out
        return std::isfinite(v) ? v : 0.0;
      },
      1e-12, &err, &l1);
  return {v, std::max(err, 1e-15 * l1)};
}

}  // namespace rigidlab::quad

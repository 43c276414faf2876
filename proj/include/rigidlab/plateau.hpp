#pragma once

// Radial C^2 test functions equal to 1 on the unit ball and 0 outside radius K.
//   d = 1: 1 - s5((r - 1) / (K - 1)) on [1, K]
//   d = 2: q(ln r / ln K) on [1, K], q a logarithmic ramp 1 - t whose two ends
//          are blended into the constants over a width 0.1 in t
// with s5(t) = t^3 (10 - 15 t + 6 t^2).

#include <json.hpp>

#include "rigidlab/core.hpp"

namespace rigidlab {

class PlateauFunction {
 public:
  static constexpr double kBlend = 0.1;
  static constexpr double kMinK = 1.1;

  /// Throws DomainError for d outside {1, 2} or K < kMinK.
  PlateauFunction(int dim, double K);

  int dim() const noexcept { return dim_; }
  double K() const noexcept { return K_; }

  double value(double r) const noexcept;
  double d1(double r) const noexcept;
  double d2(double r) const noexcept;
  double operator()(const Point& x) const noexcept { return value(x.norm()); }

  /// ||Phi||_2^2, ||grad Phi||_2^2
  double norm2() const noexcept { return norm2_; }
  double grad_norm2() const noexcept { return grad_norm2_; }
  /// sup |grad Phi|
  double C1() const noexcept { return c1_; }
  /// sup of the Hessian operator norm: max(|Phi''|, |Phi'/r|) in d = 2,
  /// |Phi''| in d = 1.
  double C2() const noexcept { return c2_; }

  /// Radii where the profile changes formula (quadrature breakpoints).
  std::vector<double> joints() const;

  nlohmann::json to_json() const;

 private:
  double hessian_norm(double r) const noexcept;

  int dim_;
  double K_;
  double logK_;
  double norm2_ = 0.0, grad_norm2_ = 0.0, c1_ = 0.0, c2_ = 0.0;
};

PlateauFunction build_plateau(int dim, double K);

/// Reference value of ||grad Phi||^2 for the unsmoothed ramp: 2 pi / ln K in
/// d = 2, 2 / (K - 1) in d = 1.
double unsmoothed_grad_norm2(int dim, double K);

}  // namespace rigidlab

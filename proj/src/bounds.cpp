#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "quad.hpp"
#include "rigidlab/error.hpp"
#include "rigidlab/variance.hpp"

namespace rigidlab {

using std::numbers::pi;

GammaConstants gamma_constants(double gamma, int dim) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw DomainError(fmt::format("decay rate gamma must be positive (got {})", gamma));
  // integral of |u|^k e^{-gamma |u|} = S_d Gamma(k + d) / gamma^{k + d}
  auto moment = [&](int k) {
    if (dim == 1) return 2.0 * std::tgamma(k + 1.0) / std::pow(gamma, k + 1);
    if (dim == 2) return 2.0 * pi * std::tgamma(k + 2.0) / std::pow(gamma, k + 2);
    throw DomainError(fmt::format("gamma constants are defined for d = 1, 2 (got d = {})", dim));
  };
  return {moment(3), moment(4), moment(2)};
}

nlohmann::json BoundTerms::to_json() const {
  return {{"kind", kind},         {"leading", leading}, {"order1", order1},
          {"order2", order2},     {"boundary", boundary}, {"total", total},
          {"constants", constants}};
}

namespace {

void require_plateau_2d(const PlateauFunction& phi, double R) {
  if (phi.dim() != 2) throw DomainError(fmt::format("the Taylor bound is for d = 2 (got d = {})", phi.dim()));
  if (!(R > 0.0) || !std::isfinite(R)) throw DomainError(fmt::format("dilation R must be positive (got {})", R));
  if (!std::isfinite(phi.C1()) || !std::isfinite(phi.C2()))
    throw DomainError("plateau smoothness constants are not available");
}

}  // namespace

BoundTerms exponential_bound(double C, double gamma, const PlateauFunction& phi, double R) {
  require_plateau_2d(phi, R);
  if (!(C >= 0.0) || !std::isfinite(C)) throw DomainError(fmt::format("amplitude C must be non-negative (got {})", C));
  const GammaConstants g = gamma_constants(gamma, 2);
  const double K2 = phi.K() * phi.K();
  BoundTerms b;
  b.kind = "exponential";
  b.leading = 2.0 * C * g.C5 * phi.grad_norm2();
  // Taylor remainder terms; pi K^2 R^2 is the area of the support of Phi_R
  b.order1 = 4.0 * pi * C * K2 * phi.C1() * phi.C2() * g.C3 / R;
  b.order2 = 2.0 * pi * C * K2 * phi.C2() * phi.C2() * g.C4 / (R * R);
  b.boundary = 0.0;
  b.total = b.leading + b.order1 + b.order2 + b.boundary;
  b.constants = {{"C", C},     {"gamma", gamma}, {"C3", g.C3},          {"C4", g.C4},
                 {"C5", g.C5}, {"K", phi.K()},   {"C1_phi", phi.C1()},  {"C2_phi", phi.C2()},
                 {"grad_norm2", phi.grad_norm2()}, {"R", R}};
  return b;
}

BoundTerms power_law_bound(double C, double s, double B, const PlateauFunction& phi, double R) {
  if (!(s > 4.0)) throw DomainError(fmt::format("power-law bound needs s > 4 in d = 2 (got s = {})", s));
  require_plateau_2d(phi, R);
  if (!(C >= 0.0) || !std::isfinite(C)) throw DomainError(fmt::format("amplitude C must be non-negative (got {})", C));
  if (!std::isfinite(B)) throw DomainError("second moment B must be finite");
  const double K = phi.K();
  const double rho = 2.0 * K * R;  // no pair farther apart has both ends in supp Phi_R
  auto env = [s](double r) { return 1.0 / (1.0 + std::pow(r, s)); };
  // 2 pi C int_0^rho r^{k+1} / (1 + r^s) dr
  auto inner = [&](int k) {
    // dyadic segments with a fixed panel count each keep huge rho cheap
    const auto g = [&](double r) { return std::pow(r, k + 1) * env(r); };
    double sum = quad::panels(g, 0.0, std::min(1.0, rho), 0.25);
    for (double c = 1.0; c < rho; c *= 2.0) {
      const double hi = std::min(2.0 * c, rho);
      sum += quad::panels(g, c, hi, (hi - c) / 4.0);
    }
    return 2.0 * pi * C * sum;
  };
  // 2 pi C int_rho^inf r^{k+1} / (1 + r^s) dr
  auto outer = [&](int k) {
    return 2.0 * pi * C * quad::half_line([&](double r) { return std::pow(r, k + 1) * env(r); }, rho).value;
  };
  const double M3 = inner(3), M4 = inner(4), TC = outer(0), Q2 = outer(2);
  BoundTerms b;
  b.kind = "power_law";
  b.leading = std::abs(B) * phi.grad_norm2();
  b.order1 = 4.0 * pi * phi.C1() * phi.C2() * K * K * M3 / R;
  b.order2 = 2.0 * pi * phi.C2() * phi.C2() * K * K * M4 / (R * R);
  // separated pairs see (Phi_R(x))^2 exactly; the leading term used the
  // untruncated B, so the far part of the second moment is added back
  b.boundary = 2.0 * R * R * phi.norm2() * TC + phi.grad_norm2() * Q2;
  b.total = b.leading + b.order1 + b.order2 + b.boundary;
  b.constants = {{"C", C},   {"s", s},   {"B", B},   {"K", K},   {"R", R},   {"M3", M3},
                 {"M4", M4}, {"T_far", TC}, {"Q2_far", Q2}, {"split_radius", rho},
                 {"C1_phi", phi.C1()}, {"C2_phi", phi.C2()}, {"norm2", phi.norm2()},
                 {"grad_norm2", phi.grad_norm2()}};
  return b;
}

DecayClass exponential_envelope(const DecayClass& dc) {
  switch (dc.kind) {
    case DecayKind::exponential: return dc;
    case DecayKind::gaussian: {
      const double g = std::sqrt(8.0 * dc.rate);
      return DecayClass::exponential(dc.amplitude * std::exp(g * g / (4.0 * dc.rate)), g);
    }
    default:
      throw DomainError("an exponential envelope needs gaussian or exponential decay");
  }
}

nlohmann::json RescaledLimit::to_json() const {
  return {{"radii", radii}, {"variances", variances}, {"ratios", ratios}, {"second_moment", second_moment},
          {"c_lim", c_lim}};
}

RescaledLimit rescaled_limit(const CorrelationModel& m, const PlateauFunction& phi, const std::vector<double>& radii,
                            const GridOptions& opts) {
  require_superhomogeneous(m);
  const auto kind = m.decay().kind;
  if (kind != DecayKind::gaussian && kind != DecayKind::exponential)
    throw DomainError(fmt::format("model '{}' has no finite second moment guarantee (decay {})", m.name(),
                                  m.decay().to_json().dump()));
  if (phi.dim() != m.dim()) throw DomainError("plateau and model dimensions differ");
  if (radii.empty()) throw DomainError("rescaled limit needs at least one radius");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw DomainError("rescaled limit radii must be strictly increasing");

  RescaledLimit out;
  out.radii = radii;
  out.second_moment = second_moment_B(m, m.default_truncation()).value;
  out.c_lim = -out.second_moment / (m.dim() == 2 ? 4.0 : 2.0);
  for (double R : radii) {
    const double v = evaluate_vls(m, ScalarField::plateau(phi, R), opts).vls3;
    out.variances.push_back(v);
    out.ratios.push_back(v / phi.grad_norm2());
  }
  return out;
}

nlohmann::json VarianceReport::to_json() const {
  nlohmann::json j{{"R", R}, {"vls1", vls1}, {"vls3", vls3}, {"defect", defect_used}, {"grid", grid.to_json()}};
  j["bound"] = bound.kind.empty() ? nlohmann::json() : bound.to_json();
  return j;
}

VarianceReport variance_report(const CorrelationModel& m, const PlateauFunction& phi, double R,
                               const GridOptions& opts) {
  if (phi.dim() != m.dim()) throw DomainError("plateau and model dimensions differ");
  VarianceReport rep;
  rep.R = R;
  rep.defect_used = superhomogeneity_defect(m, m.default_truncation());
  const VlsValues v = evaluate_vls(m, ScalarField::plateau(phi, R), opts);
  rep.vls1 = v.vls1;
  rep.vls3 = v.vls3;
  rep.grid = v.grid;
  if (m.dim() == 2 && std::abs(rep.defect_used) <= 1e-6) {
    const DecayClass& dc = m.decay();
    if (dc.kind == DecayKind::gaussian || dc.kind == DecayKind::exponential) {
      const DecayClass e = exponential_envelope(dc);
      rep.bound = exponential_bound(e.amplitude, e.rate, phi, R);
    } else if (dc.kind == DecayKind::power_rational && dc.rate > 4.0) {
      const double B = second_moment_B(m, m.default_truncation()).value;
      rep.bound = power_law_bound(dc.amplitude, dc.rate, B, phi, R);
    }
  }
  return rep;
}

}  // namespace rigidlab

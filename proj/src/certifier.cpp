#include "rigidlab/certifier.hpp"

#include <cmath>

#include <fmt/format.h>

#include "rigidlab/error.hpp"

namespace rigidlab {

namespace {

constexpr double kDefectLimit = 1e-6;
constexpr double kMaxR = 1099511627776.0;  // 2^40

RadialGrid decay_grid(const CorrelationModel& m) {
  return {std::max(m.default_truncation(), 8.0), 4001};
}

void require_epsilon(double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw DomainError(fmt::format("epsilon must be positive and finite (got {})", epsilon));
}

double require_defect(const CorrelationModel& m) {
  const double defect = superhomogeneity_defect(m, m.default_truncation());
  if (!(std::abs(defect) <= kDefectLimit))
    throw PreconditionError(fmt::format("model '{}' is not superhomogeneous: defect = {:.6g} exceeds {:g}", m.name(),
                                        defect, kDefectLimit),
                            defect);
  return defect;
}

Certificate blank(const CorrelationModel& m, double epsilon, const char* route) {
  Certificate c;
  c.epsilon = epsilon;
  c.model = m.name();
  c.model_params = m.params();
  c.dim = m.dim();
  c.route = route;
  c.provenance["truncation"] = m.default_truncation();
  return c;
}

// vls3 at the chosen (Phi, R); a grid that cannot converge fails the certificate
bool cross_check(Certificate& c, const CorrelationModel& m, const PlateauFunction& phi, const GridOptions& opts) {
  try {
    const VlsValues v = evaluate_vls(m, ScalarField::plateau(phi, c.R), opts);
    c.quadrature = v.vls3;
    c.grid = v.grid;
    return true;
  } catch (const Error& e) {
    c.diagnostics = fmt::format("quadrature cross-check failed: {}", e.what());
    return false;
  }
}

// Doubles K from 2 until lead(phi) <= target. Returns false past kMaxPlateauK.
template <class Lead>
bool choose_K(Certificate& c, Lead&& lead, double target, std::optional<PlateauFunction>& phi) {
  for (double K = 2.0; K <= kMaxPlateauK; K *= 2.0) {
    phi.emplace(build_plateau(2, K));
    c.K = K;
    const double l = lead(*phi);
    c.trace.push_back({K, 0.0, l, 0.0});
    if (l <= target) return true;
  }
  return false;
}

void explain_K_cap(Certificate& c, const PlateauFunction& phi, double lead, double target) {
  // ||grad Phi||^2 log K is nearly constant for the log ramp
  const double log_K_needed = lead * std::log(phi.K()) / target;
  c.provenance["log10_K_needed"] = log_K_needed / std::log(10.0);
  c.diagnostics = fmt::format(
      "leading term {:.6g} at K = {:g} still exceeds {:.6g}; the log ramp would need K ~ 10^{:.1f}, beyond the cap "
      "K <= {:g}",
      lead, phi.K(), target, log_K_needed / std::log(10.0), kMaxPlateauK);
}

}  // namespace

nlohmann::json Certificate::to_json() const {
  nlohmann::json tr = nlohmann::json::array();
  for (const auto& s : trace) tr.push_back({{"K", s.K}, {"R", s.R}, {"value", s.vls3}, {"delta", s.delta}});
  return {{"schema", kCertificateSchema},
          {"epsilon", epsilon},
          {"model", model},
          {"model_params", model_params},
          {"d", dim},
          {"route", route},
          {"K", K},
          {"R", R},
          {"bound", bound.kind.empty() ? nlohmann::json() : bound.to_json()},
          {"quadrature", quadrature ? nlohmann::json(*quadrature) : nlohmann::json()},
          {"grid", quadrature ? grid.to_json() : nlohmann::json()},
          {"verdict", verdict()},
          {"diagnostics", diagnostics},
          {"trace", tr},
          {"provenance", provenance}};
}

Certificate certify_exponential(const CorrelationModel& m, double epsilon, const GridOptions& opts) {
  require_epsilon(epsilon);
  if (m.dim() != 2) throw DomainError(fmt::format("certify_exponential needs d = 2 (got d = {})", m.dim()));
  const double defect = require_defect(m);
  const auto kind = m.decay().kind;
  if (kind != DecayKind::gaussian && kind != DecayKind::exponential)
    throw PreconditionError(fmt::format("model '{}' has no exponential envelope (decay {})", m.name(),
                                        to_string(kind)),
                            0.0);
  const DecayClass env = exponential_envelope(m.decay());
  const DecayReport fit = verify_decay(m, decay_grid(m), env);
  if (!fit.pass)
    throw PreconditionError(fmt::format("envelope {} does not dominate rho_tr (needs C >= {:.6g} at r = {:g})",
                                        env.to_json().dump(), fit.min_amplitude, fit.worst_radius),
                            fit.min_amplitude);

  Certificate c = blank(m, epsilon, "exponential");
  c.provenance["defect"] = defect;
  c.provenance["envelope"] = env.to_json();
  c.provenance["envelope_fit"] = fit.to_json();
  const double C = env.amplitude, gamma = env.rate;
  const double C5 = gamma_constants(gamma).C5;
  const double third = epsilon / 3.0;

  std::optional<PlateauFunction> phi;
  auto lead = [&](const PlateauFunction& p) { return 2.0 * C * C5 * p.grad_norm2(); };
  if (!choose_K(c, lead, third, phi)) {
    explain_K_cap(c, *phi, lead(*phi), third);
    c.bound = exponential_bound(C, gamma, *phi, 1.0);
    c.R = 0.0;
    return c;
  }
  // order1 ~ a / R and order2 ~ b / R^2, each held below eps / 3
  const BoundTerms unit = exponential_bound(C, gamma, *phi, 1.0);
  double R = std::ceil(std::max({unit.order1 / third, std::sqrt(unit.order2 / third), 1.0}));
  c.R = R;
  c.bound = exponential_bound(C, gamma, *phi, R);
  if (!cross_check(c, m, *phi, opts)) return c;
  c.certified = c.bound.total < epsilon && *c.quadrature < epsilon;
  if (!c.certified)
    c.diagnostics = fmt::format("bound total {:.6g} and quadrature {:.6g} must both be below {:g}", c.bound.total,
                                *c.quadrature, epsilon);
  return c;
}

namespace {

Certificate certify_power_law_2d(const CorrelationModel& m, double epsilon, const GridOptions& opts) {
  const auto& dc = m.decay();
  if (dc.kind != DecayKind::power && dc.kind != DecayKind::power_rational)
    throw PreconditionError(fmt::format("model '{}' has no power-law envelope (decay {})", m.name(),
                                        to_string(dc.kind)),
                            0.0);
  const double s = dc.rate;
  if (!(s > 4.0)) throw DomainError(fmt::format("power-law certification in d = 2 needs s > 4 (got s = {})", s));
  const double defect = require_defect(m);
  // (1 + r)^-s <= 1 / (1 + r^s), so either kind fits the rational envelope
  const DecayClass env = DecayClass::power_rational(dc.amplitude, s);
  const DecayReport fit = verify_decay(m, decay_grid(m), env);
  if (!fit.pass)
    throw PreconditionError(fmt::format("envelope {} does not dominate rho_tr (needs C >= {:.6g} at r = {:g})",
                                        env.to_json().dump(), fit.min_amplitude, fit.worst_radius),
                            fit.min_amplitude);
  const double B = second_moment_B(m, m.default_truncation()).value;

  Certificate c = blank(m, epsilon, "power_law");
  c.provenance["defect"] = defect;
  c.provenance["envelope"] = env.to_json();
  c.provenance["envelope_fit"] = fit.to_json();
  c.provenance["B"] = B;
  const double half = epsilon / 2.0;

  std::optional<PlateauFunction> phi;
  auto lead = [&](const PlateauFunction& p) { return std::abs(B) * p.grad_norm2(); };
  if (!choose_K(c, lead, half, phi)) {
    explain_K_cap(c, *phi, lead(*phi), half);
    c.bound = power_law_bound(env.amplitude, s, B, *phi, 1.0);
    return c;
  }
  double R = 1.0;
  for (;; R *= 2.0) {
    c.bound = power_law_bound(env.amplitude, s, B, *phi, R);
    if (c.bound.total < epsilon) break;
    if (R > kMaxR) {
      c.R = R;
      c.diagnostics = fmt::format("remainder terms still {:.6g} at R = {:g}", c.bound.total - c.bound.leading, R);
      return c;
    }
  }
  c.R = R;
  if (!cross_check(c, m, *phi, opts)) return c;
  c.certified = c.bound.total < epsilon && *c.quadrature < epsilon;
  if (!c.certified)
    c.diagnostics = fmt::format("bound total {:.6g} and quadrature {:.6g} must both be below {:g}", c.bound.total,
                                *c.quadrature, epsilon);
  return c;
}

Certificate certify_direct_1d(const CorrelationModel& m, double epsilon, const GridOptions& opts) {
  const DecayReport fit = verify_decay(m, decay_grid(m), DecayClass::power(0.0, 2.0));
  if (!fit.pass)
    throw PreconditionError(fmt::format("model '{}' is not dominated by C (1 + r)^-2", m.name()), fit.min_amplitude);
  const double defect = require_defect(m);
  Certificate c = blank(m, epsilon, "direct_search");
  c.provenance["defect"] = defect;
  c.provenance["envelope_fit"] = fit.to_json();
  const double half = epsilon / 2.0;
  for (double K = 2.0; K <= kMaxSearchK1; K *= 2.0) {
    const PlateauFunction phi = build_plateau(1, K);
    c.K = K;
    c.R = K;
    if (!cross_check(c, m, phi, opts)) return c;
    c.trace.push_back({K, K, *c.quadrature, c.grid.delta});
    if (*c.quadrature < half) {
      c.certified = true;
      return c;
    }
  }
  c.diagnostics = fmt::format("search cap K <= {:g} reached; last value {:.6g} is not below {:g}", kMaxSearchK1,
                              *c.quadrature, half);
  return c;
}

}  // namespace

Certificate certify_power_law(const CorrelationModel& m, double epsilon, const GridOptions& opts) {
  require_epsilon(epsilon);
  if (m.dim() == 2) return certify_power_law_2d(m, epsilon, opts);
  if (m.dim() == 1) return certify_direct_1d(m, epsilon, opts);
  throw DomainError(fmt::format("certify_power_law needs d = 1 or 2 (got d = {})", m.dim()));
}

nlohmann::json RigidityReport::to_json() const {
  auto cond = [](const ConditionReport& c) {
    return nlohmann::json{{"pass", c.pass}, {"value", c.value}, {"detail", c.detail}};
  };
  return {{"model", model},
          {"d", dim},
          {"condition_a", cond(condition_a)},
          {"condition_b", cond(condition_b)},
          {"certificate", certificate ? certificate->to_json() : nlohmann::json()},
          {"certificate_error", certificate_error},
          {"verdict", verdict},
          {"verdict_text", verdict_text}};
}

RigidityReport verdict(const CorrelationModel& m, double epsilon, const GridOptions& opts) {
  RigidityReport rep;
  rep.model = m.name();
  rep.dim = m.dim();

  try {
    const DefectReport d = superhomogeneity_defect_report(m, m.default_truncation());
    rep.condition_a.value = d.defect;
    rep.condition_a.pass = std::abs(d.defect) <= kDefectLimit;
    rep.condition_a.detail = {{"defect", d.defect}, {"truncation", d.truncation}, {"tail_error", d.tail_error},
                              {"threshold", kDefectLimit}};
  } catch (const Error& e) {
    rep.condition_a.detail = {{"error", e.what()}};
  }

  const DecayClass& dc = m.decay();
  std::optional<DecayClass> env;
  if (m.dim() == 1) {
    env = DecayClass::power(0.0, 2.0);
  } else if (m.dim() == 2) {
    if (dc.kind == DecayKind::gaussian || dc.kind == DecayKind::exponential)
      env = exponential_envelope(dc);
    else if ((dc.kind == DecayKind::power || dc.kind == DecayKind::power_rational) && dc.rate > 4.0)
      env = DecayClass::power_rational(dc.amplitude, dc.rate);
    else if (dc.kind == DecayKind::none)
      env = DecayClass::exponential(0.0, 1.0);
  } else {
    env = dc;
  }
  if (env) {
    const DecayReport fit = verify_decay(m, decay_grid(m), *env);
    rep.condition_b.pass = fit.pass;
    rep.condition_b.value = fit.envelope.amplitude;
    rep.condition_b.detail = fit.to_json();
  } else {
    rep.condition_b.detail = {{"error", fmt::format("no admissible envelope in d = {} for decay {}", m.dim(),
                                                    dc.to_json().dump())}};
  }

  if (m.dim() >= 3) {
    rep.verdict = "no_criterion_d3";
    rep.verdict_text = "no criterion available in d >= 3";
    return rep;
  }
  if (rep.condition_a.pass && rep.condition_b.pass) {
    try {
      if (m.dim() == 2 && (dc.kind == DecayKind::gaussian || dc.kind == DecayKind::exponential))
        rep.certificate = certify_exponential(m, epsilon, opts);
      else
        rep.certificate = certify_power_law(m, epsilon, opts);
    } catch (const Error& e) {
      rep.certificate_error = e.what();
    }
  }
  const bool rigid = rep.condition_a.pass && rep.condition_b.pass && rep.certificate && rep.certificate->certified;
  rep.verdict = rigid ? "rigid" : "not_covered";
  rep.verdict_text = rigid ? "rigid (by the variance criterion)" : "not covered by this criterion";
  return rep;
}

}  // namespace rigidlab

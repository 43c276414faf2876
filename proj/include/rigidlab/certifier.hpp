#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rigidlab/models.hpp"
#include "rigidlab/plateau.hpp"
#include "rigidlab/variance.hpp"

namespace rigidlab {

inline constexpr int kCertificateSchema = 1;
inline constexpr double kMaxPlateauK = 1e6;
inline constexpr double kMaxSearchK1 = 512.0;

struct SearchStep {
  double K = 0.0;
  double R = 0.0;
  double vls3 = 0.0;
  double delta = 0.0;
};

struct Certificate {
  double epsilon = 0.0;
  std::string model;
  nlohmann::json model_params;
  int dim = 0;
  std::string route;  // "exponential" | "power_law" | "direct_search"
  double K = 0.0;
  double R = 0.0;
  BoundTerms bound;  // empty kind on the direct-search route
  std::optional<double> quadrature;
  GridInfo grid;
  bool certified = false;
  std::string diagnostics;  // why certification failed, empty otherwise
  std::vector<SearchStep> trace;
  nlohmann::json provenance;

  std::string verdict() const { return certified ? "certified" : "failed"; }
  nlohmann::json to_json() const;
};

/// d = 2, |rho_tr| <= C e^{-gamma r}: K from the leading term, R from the
/// remainders, vls3 cross-check. A K beyond 1e6 yields a failed certificate.
Certificate certify_exponential(const CorrelationModel& m, double epsilon, const GridOptions& opts = {});

/// d = 2 with |rho_tr| <= C / (1 + r^s), s > 4: leading |B| ||grad Phi||^2
/// fixes K, remainders fix R. d = 1: K = 2, 4, ... (R = K) until vls3 < eps/2.
Certificate certify_power_law(const CorrelationModel& m, double epsilon, const GridOptions& opts = {});

struct ConditionReport {
  bool pass = false;
  double value = 0.0;  // defect, or the fitted amplitude
  nlohmann::json detail;
};

struct RigidityReport {
  std::string model;
  int dim = 0;
  ConditionReport condition_a;
  ConditionReport condition_b;
  std::optional<Certificate> certificate;
  std::string certificate_error;  // set when certification threw
  std::string verdict;             // "rigid" | "not_covered" | "no_criterion_d3"
  std::string verdict_text;
  nlohmann::json to_json() const;
};

inline constexpr double kVerdictEpsilon = 0.1;

/// Conditions (a) and (b) plus the matching certificate at epsilon = 0.1.
/// Failures are encoded in the report, nothing is thrown for them.
RigidityReport verdict(const CorrelationModel& m, double epsilon = kVerdictEpsilon, const GridOptions& opts = {});

}  // namespace rigidlab

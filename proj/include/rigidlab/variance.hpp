#pragma once

// Deterministic evaluation of the variance of a linear statistic
//   Var(sum f(x)) = rho_bar ||f||^2 + integral rho_tr_bar(u) I_f(u) du     (vls1)
//                 = -1/2 integral rho_tr_bar(u) D_f(u) du                  (vls3)
// with I_f(u) = int f(x) f(x - u) dx and D_f(u) = int |f(x) - f(x - u)|^2 dx,
// plus the closed-form Taylor bounds for plateau statistics.
//
// Quadrature: f is sampled at cell centres of a uniform grid; I_f and D_f are
// midpoint sums at lattice shifts u in (Delta Z)^d. Shifts with |u| < T use
// the lattice directly under a smooth taper; for radial f the remaining range
// is a radial integral of an interpolated I_f. Every result carries the
// estimated change under halving Delta, taken from a second pass at 2 Delta.

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rigidlab/models.hpp"
#include "rigidlab/plateau.hpp"

namespace rigidlab {

/// Real function on R^d supported in the ball of radius `support` about 0.
class ScalarField {
 public:
  static ScalarField zero(int dim);
  /// f == c on all of R^d (not compactly supported).
  static ScalarField constant(int dim, double c);
  static ScalarField radial(int dim, double support, std::function<double(double)> profile, double feature = 0.0);
  static ScalarField general(int dim, double support, std::function<double(const Point&)> eval);
  /// Phi(x / R).
  static ScalarField plateau(const PlateauFunction& phi, double R);

  int dim() const noexcept { return dim_; }
  double support() const noexcept { return support_; }
  bool is_zero() const noexcept { return kind_ == Kind::zero; }
  bool is_constant() const noexcept { return kind_ == Kind::constant; }
  bool is_radial() const noexcept { return static_cast<bool>(profile_); }
  /// Smallest length scale the grid must resolve (0 when unknown).
  double feature() const noexcept { return feature_; }

  double operator()(const Point& x) const;
  double profile(double r) const { return profile_(r); }

 private:
  enum class Kind { zero, constant, compact };
  ScalarField(Kind kind, int dim) : kind_(kind), dim_(dim) {}

  Kind kind_;
  int dim_;
  double support_ = 0.0;
  double constant_ = 0.0;
  double feature_ = 0.0;
  std::function<double(double)> profile_;
  std::function<double(const Point&)> eval_;
};

struct GridOptions {
  double delta = 0.0;        // cell size; 0 picks a default from f and the model
  double near_radius = 0.0;  // cap on the lattice (near-field) radius T; 0 = default
  bool check_convergence = true;
  double tolerance = 1e-4;   // max estimated relative change under halving
};

struct GridInfo {
  double delta = 0.0;
  double taper_start = 0.0;  // lattice weight is 1 below, tapers to 0 at near_radius
  double near_radius = 0.0;
  bool far_field = false;
  long cells_per_axis = 0;
  std::size_t shifts = 0;
  std::size_t far_nodes = 0;
  double change_vls1 = 0.0;  // estimated relative change when halving delta
  double change_vls3 = 0.0;
  nlohmann::json to_json() const;
};

struct VlsValues {
  double vls1 = 0.0;
  double vls3 = 0.0;
  double norm2 = 0.0;  // ||f||^2 on the same grid
  GridInfo grid;
};

/// Both identities on one grid, without the superhomogeneity precondition.
/// Throws ToleranceError if the convergence check fails.
VlsValues evaluate_vls(const CorrelationModel& m, const ScalarField& f, const GridOptions& opts = {});

double variance_vls1(const CorrelationModel& m, const ScalarField& f, const GridOptions& opts = {});
/// Throws PreconditionError (carrying the defect) unless the model's
/// superhomogeneity defect is <= 1e-6.
double variance_vls3(const CorrelationModel& m, const ScalarField& f, const GridOptions& opts = {});

/// Defect at the model's default truncation; PreconditionError above 1e-6.
double require_superhomogeneous(const CorrelationModel& m);

struct GammaConstants {
  double C3, C4, C5;
};

/// C3 = int |u|^3 e^{-gamma|u|}, C4 = int |u|^4 e^{-gamma|u|}, C5 = int |u|^2
/// e^{-gamma|u|} over R^2.
GammaConstants gamma_constants(double gamma, int dim = 2);

struct BoundTerms {
  std::string kind;  // "exponential" | "power_law"
  double leading = 0.0;
  double order1 = 0.0;    // O(1/R) interior term
  double order2 = 0.0;    // O(1/R^2) interior term
  double boundary = 0.0;  // pairs straddling the support boundary
  double total = 0.0;
  nlohmann::json constants;
  nlohmann::json to_json() const;
};

/// Bound on Var(sum Phi(x/R)) for |rho_tr| <= C e^{-gamma r} in d = 2.
BoundTerms exponential_bound(double C, double gamma, const PlateauFunction& phi, double R);

/// Bound for |rho_tr| <= C / (1 + r^s), s > 4, in d = 2, with B the second
/// moment of rho_tr.
BoundTerms power_law_bound(double C, double s, double B, const PlateauFunction& phi, double R);

/// Exponential envelope (C', gamma) implied by the model's decay class:
/// exponential as is, gaussian C e^{-a r^2} <= C e^{g^2/4a} e^{-g r} with
/// g = sqrt(8 a) (minimises C' C5(g)). DomainError otherwise.
DecayClass exponential_envelope(const DecayClass& dc);

struct RescaledLimit {
  std::vector<double> radii;
  std::vector<double> variances;
  std::vector<double> ratios;  // Var(Phi_R) / ||grad Phi||^2
  double second_moment = 0.0;  // B
  double c_lim = 0.0;          // -B / 4 (d = 2), -B / 2 (d = 1)
  nlohmann::json to_json() const;
};

RescaledLimit rescaled_limit(const CorrelationModel& m, const PlateauFunction& phi, const std::vector<double>& radii,
                            const GridOptions& opts = {});

struct VarianceReport {
  double R = 0.0;
  double vls1 = 0.0;
  double vls3 = 0.0;
  double defect_used = 0.0;
  BoundTerms bound;  // kind empty when no bound applies
  GridInfo grid;
  nlohmann::json to_json() const;
};

/// vls1, vls3 and the applicable bound for the plateau at dilation R.
VarianceReport variance_report(const CorrelationModel& m, const PlateauFunction& phi, double R,
                               const GridOptions& opts = {});

}  // namespace rigidlab

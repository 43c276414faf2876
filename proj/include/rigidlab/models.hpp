#pragma once

// Analytic correlation structure of the model catalog: one-point density,
// truncated pair correlation, asserted decay envelope, and the integral
// functionals built on them (superhomogeneity defect, second moment B,
// envelope checks).

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rigidlab/core.hpp"
#include "rigidlab/samplers.hpp"

namespace rigidlab {

enum class DecayKind {
  none,            // rho_tr == 0
  gaussian,        // exp(-a r^2)
  exponential,     // exp(-gamma r)
  power,           // (1 + r)^-s
  power_rational,  // (1 + r^s)^-1
};

std::string_view to_string(DecayKind k) noexcept;
DecayKind decay_kind_from_string(std::string_view s);

/// |rho_tr(u)| <= amplitude * envelope(|u|). `rate` is a, gamma or s.
struct DecayClass {
  DecayKind kind = DecayKind::none;
  double amplitude = 0.0;
  double rate = 0.0;

  static DecayClass gaussian(double C, double a) { return {DecayKind::gaussian, C, a}; }
  static DecayClass exponential(double C, double gamma) { return {DecayKind::exponential, C, gamma}; }
  static DecayClass power(double C, double s) { return {DecayKind::power, C, s}; }
  static DecayClass power_rational(double C, double s) { return {DecayKind::power_rational, C, s}; }

  /// Envelope without the amplitude; 0 for kind none.
  double envelope(double r) const noexcept;
  double bound(double r) const noexcept { return amplitude * envelope(r); }
  /// Integral of amplitude * envelope(|u|) over |u| > T in R^d (infinite
  /// when the envelope is not integrable).
  double tail_mass(int dim, double T) const;
  /// Same, weighted by |u|^k.
  double tail_moment(int dim, int k, double T) const;
  /// True when this envelope decays at least as fast as `other` at infinity.
  bool dominates(const DecayClass& other) const noexcept;

  nlohmann::json to_json() const;
};

/// A signed integral together with an estimate of its absolute error.
struct TailIntegral {
  double value = 0.0;
  double error = 0.0;
};

class CorrelationModel {
 public:
  virtual ~CorrelationModel() = default;

  const std::string& name() const noexcept { return name_; }
  const nlohmann::json& params() const noexcept { return params_; }
  int dim() const noexcept { return dim_; }
  /// Unit-cell average of rho1.
  double mean_intensity() const noexcept { return rho_bar_; }
  const DecayClass& decay() const noexcept { return decay_; }

  virtual bool periodic() const noexcept { return false; }
  virtual double rho1(const Point& x) const;
  virtual double rho_tr(const Point& x, const Point& y) const;
  /// Unit-cell averaged truncated correlation at separation r; equals
  /// rho_tr itself for translation-invariant models.
  virtual double rho_tr_bar(double r) const = 0;
  /// sup over base points x and directions e of |rho_tr(x, x + r e)|.
  virtual double rho_tr_sup(double r) const { return std::abs(rho_tr_bar(r)); }
  /// Integral of |u|^k rho_tr_bar(|u|) over |u| > T.
  virtual TailIntegral moment_tail(int k, double T) const;
  /// Radii where rho_tr_bar is not smooth (quadrature breakpoints).
  virtual std::vector<double> kinks() const { return {}; }
  /// Radius beyond which the remaining envelope mass is negligible; the
  /// default quadrature truncation.
  virtual double default_truncation() const;

 protected:
  CorrelationModel(std::string name, nlohmann::json params, int dim, double rho_bar, DecayClass decay);
  void set_mean_intensity(double v) noexcept { rho_bar_ = v; }
  void set_decay(DecayClass d) noexcept { decay_ = d; }

 private:
  std::string name_;
  nlohmann::json params_;
  int dim_;
  double rho_bar_;
  DecayClass decay_;
};

using ModelPtr = std::shared_ptr<const CorrelationModel>;

/// Catalog: poisson {rho, d}, ginibre {}, sine {}, perturbed_lattice {d,
/// sigma | table{radii, density}}, synthetic_power {s, c1, w}.
ModelPtr builtin_model(std::string_view name, const nlohmann::json& params = nlohmann::json::object());
std::vector<std::string> builtin_model_names();

ModelPtr make_poisson_model(double rho, int dim);
ModelPtr make_ginibre_model();
ModelPtr make_sine_model();
ModelPtr make_perturbed_lattice_model(int dim, PerturbationSpec h);
/// Zero-defect power-law model in d = 2:
/// rho_tr(r) = -c1 / (1 + r^s) + c2 exp(-r^2 / (2 w^2)), c2 fixed by the
/// zero-defect condition.
ModelPtr make_synthetic_power_model(double s, double c1, double w);

struct DefectReport {
  double defect = 0.0;
  double inner = 0.0;       // integral over |u| <= T
  double tail = 0.0;        // signed integral over |u| > T
  double tail_error = 0.0;  // error bound on `tail`
  double truncation = 0.0;
};

/// rho_bar + integral of rho_tr_bar over R^d, split at T. Throws
/// ToleranceError when the part beyond T is not known to within 1e-8.
DefectReport superhomogeneity_defect_report(const CorrelationModel& m, double T);
double superhomogeneity_defect(const CorrelationModel& m, double T);

struct SecondMoment {
  double value = 0.0;
  double tail_error = 0.0;
  double truncation = 0.0;
};

/// B = integral of |u|^2 rho_tr_bar(u). Throws DivergenceError for power
/// decay with s <= d + 2.
SecondMoment second_moment_B(const CorrelationModel& m, double T);

struct RadialGrid {
  double r_max = 0.0;
  std::size_t points = 0;  // uniform on [0, r_max], both ends included
  double at(std::size_t i) const noexcept;
};

struct DecayReport {
  bool pass = false;
  bool dominated = false;       // asymptotic domination of the envelope
  double min_amplitude = 0.0;   // smallest C with |rho_tr| <= C env on the grid
  double worst_radius = 0.0;
  DecayClass envelope;          // amplitude is the one tested against
  nlohmann::json to_json() const;
};

/// Checks |rho_tr(r)| <= C envelope(r) on the grid. With envelope amplitude
/// 0 the minimal feasible C is reported and used (fit mode). Without an
/// envelope the model's own decay class is checked.
DecayReport verify_decay(const CorrelationModel& m, const RadialGrid& grid, const DecayClass& envelope);
DecayReport verify_decay(const CorrelationModel& m, const RadialGrid& grid);

/// Integral over |u| <= T of |u|^k rho_tr_bar, by fixed-order panels.
double radial_moment(const CorrelationModel& m, int k, double T);

}  // namespace rigidlab

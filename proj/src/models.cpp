#include "rigidlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include <fmt/format.h>
#include <gsl/gsl_sf_expint.h>

#include "quad.hpp"
#include "rigidlab/error.hpp"

namespace rigidlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

int decay_rank(DecayKind k) noexcept {
  switch (k) {
    case DecayKind::none: return 4;
    case DecayKind::gaussian: return 3;
    case DecayKind::exponential: return 2;
    case DecayKind::power:
    case DecayKind::power_rational: return 1;
  }
  return 0;
}

// Catmull-Rom interpolation on a uniform table starting at 0.
class UniformTable {
 public:
  UniformTable() = default;
  UniformTable(double step, std::vector<double> values) : step_(step), v_(std::move(values)) {}

  double operator()(double x) const noexcept {
    if (v_.empty() || x < 0.0) return 0.0;
    const double t = x / step_;
    const auto n = v_.size();
    if (t >= static_cast<double>(n - 1)) return t == static_cast<double>(n - 1) ? v_.back() : 0.0;
    const auto i = static_cast<std::size_t>(t);
    const double f = t - static_cast<double>(i);
    // even extension at 0 (radial functions), zero continuation at the end
    const double p0 = i == 0 ? v_[1] : v_[i - 1];
    const double p1 = v_[i], p2 = v_[i + 1];
    const double p3 = i + 2 < n ? v_[i + 2] : 0.0;
    return p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
  }

 private:
  double step_ = 1.0;
  std::vector<double> v_;
};

double sinc_sq_pi(double r) noexcept {
  const double x = kPi * r;
  if (std::abs(x) < 1e-6) return 1.0 - x * x / 3.0;
  const double s = std::sin(x) / x;
  return s * s;
}

// ---------------------------------------------------------------- poisson

class PoissonModel final : public CorrelationModel {
 public:
  PoissonModel(double rho, int dim)
      : CorrelationModel("poisson", {{"rho", rho}, {"d", dim}}, dim, rho, DecayClass{}) {}
  double rho_tr(const Point&, const Point&) const override { return 0.0; }
  double rho_tr_bar(double) const override { return 0.0; }
  TailIntegral moment_tail(int, double) const override { return {0.0, 0.0}; }
  double default_truncation() const override { return 1.0; }
};

// ---------------------------------------------------------------- ginibre

class GinibreModel final : public CorrelationModel {
 public:
  GinibreModel()
      : CorrelationModel("ginibre", nlohmann::json::object(), 2, 1.0 / kPi,
                         DecayClass::gaussian(1.0 / (kPi * kPi), 1.0)) {}
  double rho_tr_bar(double r) const override { return -std::exp(-r * r) / (kPi * kPi); }
  TailIntegral moment_tail(int k, double T) const override {
    const double e = std::exp(-T * T);
    if (k == 0) return {-e / kPi, 1e-17};
    if (k == 2) return {-e * (T * T + 1.0) / kPi, 1e-17};
    return CorrelationModel::moment_tail(k, T);
  }
};

// ---------------------------------------------------------------- sine

class SineModel final : public CorrelationModel {
 public:
  SineModel()
      : CorrelationModel("sine", nlohmann::json::object(), 1, 1.0,
                         DecayClass::power((1.0 + 1.0 / kPi) * (1.0 + 1.0 / kPi), 2.0)) {}
  double rho_tr_bar(double r) const override { return -sinc_sq_pi(r); }
  TailIntegral moment_tail(int k, double T) const override {
    if (k != 0) throw DivergenceError(fmt::format("moment {} of the sine kernel diverges", k));
    if (T <= 0.0) return {-1.0, 1e-15};
    // integral_T^inf sin^2(pi r)/(pi r)^2 dr by parts, both half-lines
    const double s = std::sin(kPi * T);
    const double one_side = (s * s / T + kPi * (kPi / 2.0 - gsl_sf_Si(2.0 * kPi * T))) / (kPi * kPi);
    return {-2.0 * one_side, 1e-15 * (1.0 + 1.0 / T)};
  }
  double default_truncation() const override { return 64.0; }
};

// ---------------------------------------------------------------- perturbed lattice

class PerturbedLatticeModel final : public CorrelationModel {
 public:
  PerturbedLatticeModel(int dim, PerturbationSpec h, nlohmann::json params)
      : CorrelationModel("perturbed_lattice", std::move(params), dim, 1.0, DecayClass{}), h_(std::move(h)) {
    validate(h_, dim);
    if (const auto* g = std::get_if<GaussianDisplacement>(&h_)) {
      if (!(g->sigma > 0.0))
        throw DomainError("perturbed_lattice correlation model needs sigma > 0 (sigma = 0 is a bare lattice)");
      sigma_ = g->sigma;
      reach_ = 7.5 * sigma_ + 1.0;
      double theta0 = 0.0;
      for (long k = -static_cast<long>(reach_) - 1; k <= static_cast<long>(reach_) + 1; ++k)
        theta0 += std::exp(-static_cast<double>(k * k) / (sigma_ * sigma_));
      set_decay(DecayClass::gaussian(std::pow(theta0 / (2.0 * kPi * sigma_ * sigma_), dim),
                                     1.0 / (4.0 * sigma_ * sigma_)));
    } else {
      const auto& t = std::get<RadialTable>(h_);
      reach_ = t.support();
      build_autocorrelation(t);
    }
    // The unit-cell average of a lattice periodisation is the total mass of h.
    if (const auto* t = std::get_if<RadialTable>(&h_))
      set_mean_intensity(t->mass());
    else
      set_mean_intensity(cell_average_rho1());
    if (!std::holds_alternative<GaussianDisplacement>(h_)) {
      const auto& t = std::get<RadialTable>(h_);
      const double hmax = *std::max_element(t.density().begin(), t.density().end());
      double rho1max = 0.0;
      for_cell_grid(8, [&](const Point& x) { rho1max = std::max(rho1max, rho1(x)); });
      set_decay(DecayClass::exponential(1.05 * hmax * rho1max * std::exp(2.0 * t.support()), 1.0));
    }
  }

  bool periodic() const noexcept override { return true; }

  double rho1(const Point& x) const override {
    if (sigma_ > 0.0) {
      double p = 1.0;
      for (int a = 0; a < dim(); ++a) p *= theta1(x[a]);
      return p;
    }
    const auto& t = std::get<RadialTable>(h_);
    double s = 0.0;
    for_sites_near(x, [&](const Point& z) {
      Point v(dim());
      for (int a = 0; a < dim(); ++a) v[a] = x[a] - z[a];
      s += t(v.norm());
    });
    return s;
  }

  double rho_tr(const Point& x, const Point& y) const override {
    if (sigma_ > 0.0) {
      double p = 1.0;
      for (int a = 0; a < dim(); ++a) p *= theta2(x[a], y[a]);
      return -p;
    }
    const auto& t = std::get<RadialTable>(h_);
    double s = 0.0;
    for_sites_near(x, [&](const Point& z) {
      Point vx(dim()), vy(dim());
      for (int a = 0; a < dim(); ++a) {
        vx[a] = x[a] - z[a];
        vy[a] = y[a] - z[a];
      }
      s += t(vx.norm()) * t(vy.norm());
    });
    return -s;
  }

  double rho_tr_bar(double r) const override {
    if (sigma_ > 0.0) {
      const double s2 = sigma_ * sigma_;
      return -std::pow(4.0 * kPi * s2, -0.5 * dim()) * std::exp(-r * r / (4.0 * s2));
    }
    return -autocorr_(std::abs(r));
  }

  double rho_tr_sup(double r) const override {
    double best = 0.0;
    for (const auto& e : directions()) {
      for_cell_grid(4, [&](const Point& x) {
        Point y(dim());
        for (int a = 0; a < dim(); ++a) y[a] = x[a] + r * e[a];
        best = std::max(best, std::abs(rho_tr(x, y)));
      });
    }
    return best;
  }

  TailIntegral moment_tail(int k, double T) const override {
    if (sigma_ > 0.0 && k == 0) {
      // -(4 pi s^2)^{-d/2} exp(-r^2 / 4 s^2) over |u| > T, with b^2 = 4 s^2
      const double b = 2.0 * sigma_;
      const double A = std::pow(4.0 * kPi * sigma_ * sigma_, -0.5 * dim());
      const double z = T / b;
      double v = 0.0;
      switch (dim()) {
        case 1: v = A * b * std::sqrt(kPi) * std::erfc(z); break;
        case 2: v = A * kPi * b * b * std::exp(-z * z); break;
        default:
          v = A * 4.0 * kPi * (0.5 * b * b * T * std::exp(-z * z) + 0.25 * std::sqrt(kPi) * b * b * b * std::erfc(z));
      }
      return {-v, 1e-17 + 1e-15 * v};
    }
    if (sigma_ == 0.0) {
      const double end = 2.0 * reach_;
      if (T >= end) return {0.0, 0.0};
      const double area = unit_sphere_area(dim());
      const double v = quad::panels(
          [&](double r) { return area * std::pow(r, dim() - 1 + k) * rho_tr_bar(r); }, T, end, 0.05, kinks());
      return {v, 1e-12};
    }
    return CorrelationModel::moment_tail(k, T);
  }

  std::vector<double> kinks() const override {
    if (sigma_ > 0.0) return {};
    return {2.0 * reach_};
  }

  double default_truncation() const override {
    if (sigma_ > 0.0) return CorrelationModel::default_truncation();
    return 2.0 * reach_;
  }

 private:
  static double gauss1(double t, double sigma) noexcept {
    return std::exp(-t * t / (2.0 * sigma * sigma)) / (std::sqrt(2.0 * kPi) * sigma);
  }

  // sum_k g(t - k)
  double theta1(double t) const noexcept {
    const long lo = static_cast<long>(std::floor(t - reach_)), hi = static_cast<long>(std::ceil(t + reach_));
    double s = 0.0;
    for (long k = lo; k <= hi; ++k) s += gauss1(t - static_cast<double>(k), sigma_);
    return s;
  }

  // sum_k g(x - k) g(y - k)
  double theta2(double x, double y) const noexcept {
    const double c = 0.5 * (x + y);
    const long lo = static_cast<long>(std::floor(c - reach_)), hi = static_cast<long>(std::ceil(c + reach_));
    double s = 0.0;
    for (long k = lo; k <= hi; ++k) {
      const double kk = static_cast<double>(k);
      s += gauss1(x - kk, sigma_) * gauss1(y - kk, sigma_);
    }
    return s;
  }

  template <class F>
  void for_sites_near(const Point& x, F&& f) const {
    const int d = dim();
    long lo[kMaxDim] = {0, 0, 0}, hi[kMaxDim] = {0, 0, 0}, idx[kMaxDim] = {0, 0, 0};
    for (int a = 0; a < d; ++a) {
      lo[a] = static_cast<long>(std::floor(x[a] - reach_));
      hi[a] = static_cast<long>(std::ceil(x[a] + reach_));
      idx[a] = lo[a];
    }
    Point z(d);
    while (true) {
      for (int a = 0; a < d; ++a) z[a] = static_cast<double>(idx[a]);
      f(z);
      int a = d - 1;
      for (; a >= 0; --a) {
        if (++idx[a] <= hi[a]) break;
        idx[a] = lo[a];
      }
      if (a < 0) break;
    }
  }

  // Midpoints of an n^d grid on the unit cell.
  template <class F>
  void for_cell_grid(int n, F&& f) const {
    const int d = dim();
    int idx[kMaxDim] = {0, 0, 0};
    Point x(d);
    while (true) {
      for (int a = 0; a < d; ++a) x[a] = (idx[a] + 0.5) / n;
      f(x);
      int a = d - 1;
      for (; a >= 0; --a) {
        if (++idx[a] < n) break;
        idx[a] = 0;
      }
      if (a < 0) break;
    }
  }

  std::vector<Point> directions() const {
    switch (dim()) {
      case 1: return {Point{1.0}};
      case 2: return {Point{1.0, 0.0}, Point{std::sqrt(0.5), std::sqrt(0.5)}};
      default: {
        const double s3 = 1.0 / std::sqrt(3.0);
        return {Point{1.0, 0.0, 0.0}, Point{std::sqrt(0.5), std::sqrt(0.5), 0.0}, Point{s3, s3, s3}};
      }
    }
  }

  double cell_average_rho1() const {
    const int n = 32;
    double s = 0.0;
    std::size_t count = 0;
    for_cell_grid(n, [&](const Point& x) {
      s += rho1(x);
      ++count;
    });
    return s / static_cast<double>(count);
  }

  // (h * h)(r) = integral of h(|w|) h(|w + r e|) dw, tabulated on [0, 2 r_h].
  void build_autocorrelation(const RadialTable& t) {
    const double rh = t.support();
    const std::size_t n = 513;
    const double step = 2.0 * rh / static_cast<double>(n - 1);
    std::vector<double> vals(n, 0.0);
    const auto& knots = t.radii();
    for (std::size_t i = 0; i < n; ++i) {
      const double r = step * static_cast<double>(i);
      vals[i] = autocorr_at(t, r, knots);
    }
    vals.back() = 0.0;
    autocorr_ = UniformTable(step, std::move(vals));
  }

  double autocorr_at(const RadialTable& t, double r, const std::vector<double>& knots) const {
    const double rh = t.support();
    const int d = dim();
    if (d == 1) {
      std::vector<double> cuts;
      for (double k : knots) {
        cuts.push_back(k);
        cuts.push_back(-k);
        cuts.push_back(k - r);
        cuts.push_back(-k - r);
      }
      return quad::panels([&](double w) { return t(std::abs(w)) * t(std::abs(w + r)); }, -rh, rh, 0.05, cuts);
    }
    if (r == 0.0) {
      return quad::panels([&](double p) { return unit_sphere_area(d) * std::pow(p, d - 1) * t(p) * t(p); }, 0.0,
                          rh, 0.05, knots);
    }
    if (d == 3) {
      // angular integral in closed variable s = |w + r e|
      auto inner = [&](double p) {
        if (p == 0.0) return 0.0;
        const double a = std::abs(p - r), b = std::min(p + r, rh);
        if (!(b > a)) return 0.0;
        const double v = quad::panels([&](double s) { return t(s) * s; }, a, b, 0.05, knots);
        return 2.0 * kPi * p * p * t(p) * v / (p * r);
      };
      return quad::panels(inner, 0.0, rh, 0.05, knots);
    }
    auto inner = [&](double p) {
      if (p == 0.0) return 0.0;
      std::vector<double> cuts;
      for (double k : knots) {
        const double c = (k * k - p * p - r * r) / (2.0 * p * r);
        if (c > -1.0 && c < 1.0) cuts.push_back(std::acos(c));
      }
      const double v = quad::panels(
          [&](double th) { return t(std::sqrt(std::max(0.0, p * p + r * r + 2.0 * p * r * std::cos(th)))); }, 0.0,
          kPi, 0.1, cuts);
      return 2.0 * p * t(p) * v;
    };
    // The angular integral has square-root singularities in p where the circle
    // about the shifted centre touches a knot circle.
    std::vector<double> pcuts = knots;
    for (double k : knots) {
      pcuts.push_back(std::abs(k - r));
      pcuts.push_back(k + r);
    }
    return quad::panels(inner, 0.0, rh, 0.05, pcuts);
  }

  PerturbationSpec h_;
  double sigma_ = 0.0;
  double reach_ = 0.0;
  UniformTable autocorr_;
};

// ---------------------------------------------------------------- synthetic power law

class SyntheticPowerModel final : public CorrelationModel {
 public:
  SyntheticPowerModel(double s, double c1, double w)
      : CorrelationModel("synthetic_power", {{"s", s}, {"c1", c1}, {"w", w}}, 2, 1.0, DecayClass{}),
        s_(s), c1_(c1), w_(w) {
    if (!(s > 2.0)) throw DomainError(fmt::format("synthetic_power needs s > 2 (got {})", s));
    if (!(c1 > 0.0) || !(w > 0.0)) throw DomainError("synthetic_power needs c1 > 0 and w > 0");
    // integral over R^2 of 1 / (1 + |u|^s) = 2 pi (pi / s) / sin(2 pi / s)
    const double Is = 2.0 * kPi * (kPi / s) / std::sin(2.0 * kPi / s);
    c2_ = (c1 * Is - 1.0) / (2.0 * kPi * w * w);
    if (!(c2_ >= 0.0)) throw DomainError("synthetic_power: c1 too small to cancel the intensity");
    double C = c1;
    for (int i = 0; i <= 200000; ++i) {
      const double r = 1e-4 * i;
      C = std::max(C, std::abs(rho_tr_bar(r)) * (1.0 + std::pow(r, s)));
    }
    set_decay(DecayClass::power_rational(C * (1.0 + 1e-6), s));
  }

  double c2() const noexcept { return c2_; }

  double rho_tr_bar(double r) const override {
    return -c1_ / (1.0 + std::pow(std::abs(r), s_)) + c2_ * std::exp(-r * r / (2.0 * w_ * w_));
  }
  double default_truncation() const override { return 16.0; }

 private:
  double s_, c1_, w_, c2_ = 0.0;
};

double json_number(const nlohmann::json& p, const char* key) {
  if (!p.contains(key)) throw DomainError(fmt::format("missing model parameter '{}'", key));
  if (!p.at(key).is_number()) throw DomainError(fmt::format("model parameter '{}' must be a number", key));
  return p.at(key).get<double>();
}

double json_number_or(const nlohmann::json& p, const char* key, double fallback) {
  return p.contains(key) ? json_number(p, key) : fallback;
}

void reject_unknown(const nlohmann::json& p, std::initializer_list<const char*> allowed, std::string_view model) {
  if (!p.is_object()) throw DomainError("model params must be a JSON object");
  for (auto it = p.begin(); it != p.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw DomainError(fmt::format("unknown parameter '{}' for model '{}'", it.key(), model));
  }
}

int json_dim(const nlohmann::json& p, int fallback) {
  const double d = json_number_or(p, "d", fallback);
  if (d != std::floor(d) || d < 1 || d > kMaxDim) throw DomainError(fmt::format("d must be 1, 2 or 3 (got {})", d));
  return static_cast<int>(d);
}

}  // namespace

// ---------------------------------------------------------------- DecayClass

std::string_view to_string(DecayKind k) noexcept {
  switch (k) {
    case DecayKind::none: return "none";
    case DecayKind::gaussian: return "gaussian";
    case DecayKind::exponential: return "exponential";
    case DecayKind::power: return "power";
    case DecayKind::power_rational: return "power_rational";
  }
  return "none";
}

DecayKind decay_kind_from_string(std::string_view s) {
  for (auto k : {DecayKind::none, DecayKind::gaussian, DecayKind::exponential, DecayKind::power,
                 DecayKind::power_rational})
    if (to_string(k) == s) return k;
  throw DomainError(fmt::format("unknown decay kind '{}'", s));
}

double DecayClass::envelope(double r) const noexcept {
  r = std::abs(r);
  switch (kind) {
    case DecayKind::none: return 0.0;
    case DecayKind::gaussian: return std::exp(-rate * r * r);
    case DecayKind::exponential: return std::exp(-rate * r);
    case DecayKind::power: return std::pow(1.0 + r, -rate);
    case DecayKind::power_rational: return 1.0 / (1.0 + std::pow(r, rate));
  }
  return 0.0;
}

double DecayClass::tail_moment(int dim, int k, double T) const {
  if (kind == DecayKind::none || amplitude == 0.0) return 0.0;
  if ((kind == DecayKind::power || kind == DecayKind::power_rational) && rate <= dim + k) return kInf;
  const double area = unit_sphere_area(dim);
  const auto t = quad::half_line([&](double r) { return area * std::pow(r, dim - 1 + k) * envelope(r); },
                                 std::max(T, 0.0));
  return amplitude * (t.value + t.error);
}

double DecayClass::tail_mass(int dim, double T) const { return tail_moment(dim, 0, T); }

bool DecayClass::dominates(const DecayClass& other) const noexcept {
  const int a = decay_rank(kind), b = decay_rank(other.kind);
  if (kind == DecayKind::none) return true;
  if (a != b) return a > b;
  return rate >= other.rate;
}

nlohmann::json DecayClass::to_json() const {
  return {{"kind", to_string(kind)}, {"amplitude", amplitude}, {"rate", rate}};
}

// ---------------------------------------------------------------- CorrelationModel

CorrelationModel::CorrelationModel(std::string name, nlohmann::json params, int dim, double rho_bar, DecayClass decay)
    : name_(std::move(name)), params_(std::move(params)), dim_(dim), rho_bar_(rho_bar), decay_(decay) {}

double CorrelationModel::rho1(const Point&) const { return rho_bar_; }

double CorrelationModel::rho_tr(const Point& x, const Point& y) const {
  if (x.dim() != dim_ || y.dim() != dim_) throw DomainError("point dimension does not match the model");
  double s = 0.0;
  for (int a = 0; a < dim_; ++a) s += (x[a] - y[a]) * (x[a] - y[a]);
  return rho_tr_bar(std::sqrt(s));
}

TailIntegral CorrelationModel::moment_tail(int k, double T) const {
  if ((decay_.kind == DecayKind::power || decay_.kind == DecayKind::power_rational) && decay_.rate <= dim_ + k)
    throw DivergenceError(fmt::format("moment {} of model '{}' diverges (power decay s = {} <= d + {} = {})", k,
                                      name_, decay_.rate, k, dim_ + k));
  const double area = unit_sphere_area(dim_);
  return quad::half_line([&](double r) { return area * std::pow(r, dim_ - 1 + k) * rho_tr_bar(r); },
                         std::max(T, 0.0));
}

double CorrelationModel::default_truncation() const {
  switch (decay_.kind) {
    case DecayKind::none: return 1.0;
    case DecayKind::gaussian:
    case DecayKind::exponential: {
      double T = 1.0;
      while (T < 1e4 && decay_.bound(T) >= 1e-18) T += 0.5;
      return T;
    }
    default: return dim_ == 1 ? 64.0 : 16.0;
  }
}

// ---------------------------------------------------------------- catalog

ModelPtr make_poisson_model(double rho, int dim) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError(fmt::format("poisson rho must be > 0 (got {})", rho));
  if (dim < 1 || dim > kMaxDim) throw DomainError("poisson d must be 1, 2 or 3");
  return std::make_shared<PoissonModel>(rho, dim);
}

ModelPtr make_ginibre_model() { return std::make_shared<GinibreModel>(); }
ModelPtr make_sine_model() { return std::make_shared<SineModel>(); }

ModelPtr make_perturbed_lattice_model(int dim, PerturbationSpec h) {
  if (dim < 1 || dim > kMaxDim) throw DomainError("perturbed_lattice d must be 1, 2 or 3");
  nlohmann::json params = {{"d", dim}};
  if (const auto* g = std::get_if<GaussianDisplacement>(&h)) {
    params["sigma"] = g->sigma;
  } else {
    const auto& t = std::get<RadialTable>(h);
    params["table"] = {{"radii", t.radii()}, {"density", t.density()}};
  }
  return std::make_shared<PerturbedLatticeModel>(dim, std::move(h), std::move(params));
}

ModelPtr make_synthetic_power_model(double s, double c1, double w) {
  return std::make_shared<SyntheticPowerModel>(s, c1, w);
}

std::vector<std::string> builtin_model_names() {
  return {"poisson", "ginibre", "sine", "perturbed_lattice", "synthetic_power"};
}

ModelPtr builtin_model(std::string_view name, const nlohmann::json& params) {
  const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
  if (name == "poisson") {
    reject_unknown(p, {"rho", "d"}, name);
    return make_poisson_model(json_number(p, "rho"), json_dim(p, 2));
  }
  if (name == "ginibre") {
    reject_unknown(p, {}, name);
    return make_ginibre_model();
  }
  if (name == "sine") {
    reject_unknown(p, {}, name);
    return make_sine_model();
  }
  if (name == "perturbed_lattice") {
    reject_unknown(p, {"d", "sigma", "table"}, name);
    if (!p.contains("d")) throw DomainError("missing model parameter 'd'");
    const int d = json_dim(p, 2);
    if (p.contains("sigma") == p.contains("table"))
      throw DomainError("perturbed_lattice needs exactly one of 'sigma' or 'table'");
    if (p.contains("sigma")) return make_perturbed_lattice_model(d, GaussianDisplacement{json_number(p, "sigma")});
    const auto& t = p.at("table");
    if (!t.is_object() || !t.contains("radii") || !t.contains("density"))
      throw DomainError("perturbed_lattice table needs 'radii' and 'density' arrays");
    auto radii = t.at("radii").get<std::vector<double>>();
    auto dens = t.at("density").get<std::vector<double>>();
    const bool normalize = t.value("normalize", false);
    return make_perturbed_lattice_model(d, normalize ? RadialTable::normalized(d, std::move(radii), std::move(dens))
                                                     : RadialTable(d, std::move(radii), std::move(dens)));
  }
  if (name == "synthetic_power") {
    reject_unknown(p, {"s", "c1", "w"}, name);
    return make_synthetic_power_model(json_number_or(p, "s", 5.0), json_number_or(p, "c1", 1.0),
                                      json_number_or(p, "w", 0.6));
  }
  throw DomainError(fmt::format("unknown model '{}'", name));
}

// ---------------------------------------------------------------- functionals

double radial_moment(const CorrelationModel& m, int k, double T) {
  const double area = unit_sphere_area(m.dim());
  const int d = m.dim();
  return quad::panels([&](double r) { return area * std::pow(r, d - 1 + k) * m.rho_tr_bar(r); }, 0.0, T, 0.25,
                      m.kinks());
}

DefectReport superhomogeneity_defect_report(const CorrelationModel& m, double T) {
  if (!(T > 0.0)) throw DomainError(fmt::format("truncation must be > 0 (got {})", T));
  DefectReport rep;
  rep.truncation = T;
  rep.inner = radial_moment(m, 0, T);
  const TailIntegral tail = m.moment_tail(0, T);
  rep.tail = tail.value;
  rep.tail_error = tail.error;
  if (!(tail.error <= 1e-8))
    throw ToleranceError(fmt::format("correlation tail beyond T = {} is only known to {:.3g}", T, tail.error),
                         tail.error);
  rep.defect = m.mean_intensity() + rep.inner + rep.tail;
  return rep;
}

double superhomogeneity_defect(const CorrelationModel& m, double T) {
  return superhomogeneity_defect_report(m, T).defect;
}

SecondMoment second_moment_B(const CorrelationModel& m, double T) {
  const auto& dc = m.decay();
  if ((dc.kind == DecayKind::power || dc.kind == DecayKind::power_rational) && dc.rate <= m.dim() + 2)
    throw DivergenceError(fmt::format("second moment of '{}' diverges: power decay s = {} <= d + 2 = {}", m.name(),
                                      dc.rate, m.dim() + 2));
  if (dc.kind == DecayKind::none) return {0.0, 0.0, T};
  const TailIntegral tail = m.moment_tail(2, T);
  return {radial_moment(m, 2, T) + tail.value, tail.error, T};
}

double RadialGrid::at(std::size_t i) const noexcept {
  if (points <= 1) return 0.0;
  return r_max * static_cast<double>(i) / static_cast<double>(points - 1);
}

nlohmann::json DecayReport::to_json() const {
  return {{"pass", pass},
          {"dominated", dominated},
          {"min_amplitude", min_amplitude},
          {"worst_radius", worst_radius},
          {"envelope", envelope.to_json()}};
}

DecayReport verify_decay(const CorrelationModel& m, const RadialGrid& grid, const DecayClass& envelope) {
  if (grid.points < 2 || !(grid.r_max > 0.0)) throw DomainError("decay grid needs >= 2 points and r_max > 0");
  DecayReport rep;
  rep.envelope = envelope;
  rep.dominated = m.decay().dominates(envelope);
  for (std::size_t i = 0; i < grid.points; ++i) {
    const double r = grid.at(i);
    const double v = m.rho_tr_sup(r);
    if (v == 0.0) continue;
    const double e = envelope.envelope(r);
    const double ratio = e > 0.0 ? v / e : kInf;
    if (ratio > rep.min_amplitude) {
      rep.min_amplitude = ratio;
      rep.worst_radius = r;
    }
  }
  if (!(envelope.amplitude > 0.0)) rep.envelope.amplitude = rep.min_amplitude;
  rep.pass = rep.dominated && std::isfinite(rep.min_amplitude) &&
             rep.min_amplitude <= rep.envelope.amplitude * (1.0 + 1e-12);
  return rep;
}

DecayReport verify_decay(const CorrelationModel& m, const RadialGrid& grid) {
  return verify_decay(m, grid, m.decay());
}

}  // namespace rigidlab

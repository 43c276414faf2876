#include "rigidlab/variance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "quad.hpp"
#include "rigidlab/error.hpp"
#include "rigidlab/parallel.hpp"
#include "rigidlab/simd/kernels.hpp"

namespace rigidlab {

// ---------------------------------------------------------------- ScalarField

ScalarField ScalarField::zero(int dim) {
  ScalarField f(Kind::zero, dim);
  f.profile_ = [](double) { return 0.0; };
  return f;
}

ScalarField ScalarField::constant(int dim, double c) {
  ScalarField f(Kind::constant, dim);
  f.constant_ = c;
  f.support_ = std::numeric_limits<double>::infinity();
  f.profile_ = [c](double) { return c; };
  return f;
}

ScalarField ScalarField::radial(int dim, double support, std::function<double(double)> profile, double feature) {
  if (!(support > 0.0) || !std::isfinite(support)) throw DomainError("field support radius must be positive");
  ScalarField f(Kind::compact, dim);
  f.support_ = support;
  f.profile_ = std::move(profile);
  f.feature_ = feature;
  return f;
}

ScalarField ScalarField::general(int dim, double support, std::function<double(const Point&)> eval) {
  if (!(support > 0.0) || !std::isfinite(support)) throw DomainError("field support radius must be positive");
  ScalarField f(Kind::compact, dim);
  f.support_ = support;
  f.eval_ = std::move(eval);
  return f;
}

ScalarField ScalarField::plateau(const PlateauFunction& phi, double R) {
  if (!(R > 0.0) || !std::isfinite(R)) throw DomainError(fmt::format("dilation R must be positive (got {})", R));
  const double K = phi.K();
  const double feature = phi.dim() == 1 ? R * (K - 1.0)
                                        : R * (std::pow(K, PlateauFunction::kBlend) - 1.0);
  return radial(phi.dim(), K * R, [phi, R](double r) { return phi.value(r / R); }, feature);
}

double ScalarField::operator()(const Point& x) const {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::constant: return constant_;
    case Kind::compact: break;
  }
  if (profile_) return profile_(x.norm());
  return eval_(x);
}

nlohmann::json GridInfo::to_json() const {
  return {{"delta", delta},
          {"taper_start", taper_start},
          {"near_radius", near_radius},
          {"far_field", far_field},
          {"cells_per_axis", cells_per_axis},
          {"shifts", shifts},
          {"far_nodes", far_nodes},
          {"change_vls1", change_vls1},
          {"change_vls3", change_vls3},
          {"scheme", "midpoint-product"}};
}

// ---------------------------------------------------------------- lattice engine

namespace {

constexpr double kTaper = 2.0;
constexpr long kMaxCells2 = 2048;
// automatic refinement may go one halving past the default cap
constexpr long kRefineCells2 = 4096;
constexpr int kMaxHalvings = 2;
constexpr long kMaxCells1 = 1L << 22;
constexpr double kFarSpacing = 0.03;  // relative node spacing of the far table

// C-infinity step from 0 to 1 on [0, 1]; lattice sums of smooth integrands
// converge faster than any power of the cell size
double smooth_step(double t) noexcept {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

struct Layout {
  int d = 1;
  double delta = 0.0;
  double t_in = 0.0;  // taper start
  double t_out = 0.0; // near radius
  bool far = false;
};

double taper(const Layout& L, double r) noexcept {
  if (r <= L.t_in) return 1.0;
  if (r >= L.t_out) return 0.0;
  return 1.0 - smooth_step((r - L.t_in) / (L.t_out - L.t_in));
}

// f on cell centres (i - n/2 + 1/2) delta, zero-padded by P cells per side.
struct FieldGrid {
  int d = 1;
  double delta = 0.0;
  long n = 0, P = 0, W = 0;
  std::vector<double> g;
  double norm2 = 0.0;

  std::size_t first() const noexcept { return static_cast<std::size_t>(d == 2 ? P * W + P : P); }
  std::size_t last() const noexcept {  // one past the final data cell
    return static_cast<std::size_t>(d == 2 ? (P + n - 1) * W + P + n : P + n);
  }
  const double* row(long j) const noexcept { return g.data() + (d == 2 ? (P + j) * W + P : P); }
};

FieldGrid sample_field(const ScalarField& f, double delta, long P) {
  FieldGrid G;
  G.d = f.dim();
  G.delta = delta;
  G.n = 2 * static_cast<long>(std::ceil(f.support() / delta));
  G.P = P;
  G.W = G.n + 2 * P;
  const long rows = G.d == 2 ? G.W : 1;
  G.g.assign(static_cast<std::size_t>(G.W * rows), 0.0);
  auto centre = [&](long i) { return (static_cast<double>(i) - 0.5 * static_cast<double>(G.n) + 0.5) * delta; };
  if (G.d == 1) {
    Point x(1);
    for (long i = 0; i < G.n; ++i) {
      x[0] = centre(i);
      G.g[static_cast<std::size_t>(P + i)] = f.is_radial() ? f.profile(std::abs(x[0])) : f(x);
    }
  } else {
    parallel::for_each_index(static_cast<std::size_t>(G.n), [&](std::size_t jj) {
      const long j = static_cast<long>(jj);
      const double y = centre(j);
      Point x(2);
      double* row = G.g.data() + (P + j) * G.W + P;
      for (long i = 0; i < G.n; ++i) {
        const double xi = centre(i);
        if (f.is_radial()) {
          row[i] = f.profile(std::sqrt(xi * xi + y * y));
        } else {
          x[0] = xi;
          x[1] = y;
          row[i] = f(x);
        }
      }
    });
  }
  double s = 0.0;
  for (double v : G.g) s += v * v;
  G.norm2 = s * std::pow(delta, G.d);
  return G;
}

struct Shift {
  long a, b;
  double r;
  double mult;
};

std::vector<Shift> near_shifts(int d, bool radial, double delta, double t_out) {
  const long A = static_cast<long>(std::ceil(t_out / delta));
  std::vector<Shift> out;
  auto add = [&](long a, long b, double mult) {
    const double r = delta * std::sqrt(static_cast<double>(a * a + b * b));
    if (r < t_out) out.push_back({a, b, r, mult});
  };
  if (d == 1) {
    for (long a = 0; a <= A; ++a) add(a, 0, a == 0 ? 1.0 : 2.0);
  } else if (radial) {
    // one octant of the 8-fold symmetric lattice
    for (long a = 0; a <= A; ++a)
      for (long b = 0; b <= a; ++b) add(a, b, (a == 0 && b == 0) ? 1.0 : (b == 0 || a == b) ? 4.0 : 8.0);
  } else {
    // half plane; D and I are even in u for any f
    for (long b = 0; b <= A; ++b)
      for (long a = -A; a <= A; ++a) {
        if (b == 0 && a < 0) continue;
        add(a, b, (a == 0 && b == 0) ? 1.0 : 2.0);
      }
  }
  return out;
}

struct Sums {
  double vls1 = 0.0, vls3 = 0.0, norm2 = 0.0;
  long cells = 0;
  std::size_t shifts = 0, far_nodes = 0;
};

// Cubic Lagrange interpolation through the four nodes around r.
double interp(const std::vector<double>& x, const std::vector<double>& v, double r) noexcept {
  const long n = static_cast<long>(x.size());
  long i = static_cast<long>(std::upper_bound(x.begin(), x.end(), r) - x.begin()) - 2;
  i = std::clamp(i, 0L, std::max(0L, n - 4));
  const long m = std::min(4L, n - i);
  double out = 0.0;
  for (long a = 0; a < m; ++a) {
    double w = 1.0;
    for (long b = 0; b < m; ++b)
      if (b != a) w *= (r - x[static_cast<std::size_t>(i + b)]) / (x[static_cast<std::size_t>(i + a)] - x[static_cast<std::size_t>(i + b)]);
    out += w * v[static_cast<std::size_t>(i + a)];
  }
  return out;
}

Sums lattice_sums(const CorrelationModel& m, const ScalarField& f, const Layout& L) {
  const int d = L.d;
  const double cell = std::pow(L.delta, d);
  const long P = static_cast<long>(std::ceil(L.t_out / L.delta)) + 1;
  const FieldGrid G = sample_field(f, L.delta, P);
  const auto& K = simd::kernels();

  Sums out;
  out.norm2 = G.norm2;
  out.cells = G.n;

  // near field: lattice shifts under the taper
  const auto shifts = near_shifts(d, f.is_radial(), L.delta, L.t_out);
  std::vector<double> part1(shifts.size()), part3(shifts.size());
  const std::size_t lo = G.first(), hi = G.last();
  parallel::for_each_index(shifts.size(), [&](std::size_t s) {
    const Shift& sh = shifts[s];
    const long off = d == 2 ? sh.b * G.W + sh.a : sh.a;
    // sum over k in [lo - off, hi) of (g[k] - g[k + off])^2 and g[k] g[k + off]
    const std::size_t start = off >= 0 ? lo - static_cast<std::size_t>(off) : lo;
    const std::size_t stop = off >= 0 ? hi : hi - static_cast<std::size_t>(-off);
    const double* x = G.g.data() + start;
    const double* y = x + off;
    const simd::SqDiffDot r = K.sq_diff_dot(x, y, stop - start);
    const double w = sh.mult * taper(L, sh.r) * m.rho_tr_bar(sh.r);
    part1[s] = w * r.dot;
    part3[s] = w * r.sq_diff;
  });
  double near1 = 0.0, near3 = 0.0;
  for (std::size_t s = 0; s < shifts.size(); ++s) {
    near1 += part1[s];
    near3 += part3[s];
  }
  // both the x-sum and the u-sum carry a cell volume
  near1 *= cell * cell;
  near3 *= cell * cell;
  out.shifts = shifts.size();

  double far1 = 0.0, far3 = 0.0;
  if (L.far) {
    const double diam = static_cast<double>(G.n) * L.delta;  // I vanishes beyond
    const double area = unit_sphere_area(d);
    const double two_n2 = 2.0 * G.norm2;
    const double end = std::max(diam, L.t_out);
    // I(r) on lattice shifts along the first axis: every cell near the taper,
    // then geometrically sparser, never coarser than half the field's feature
    std::vector<double> xs, I;
    if (L.t_in < diam) {
      const long m_in = static_cast<long>(std::floor(L.t_in / L.delta));
      const long max_step =
          f.feature() > 0.0 ? std::max(1L, static_cast<long>(0.5 * f.feature() / L.delta)) : G.n;
      std::vector<long> shifts_m;
      for (long mm = std::max(0L, m_in - 3);; ) {
        shifts_m.push_back(mm);
        if (mm > G.n + 1) break;
        mm += std::clamp(static_cast<long>(kFarSpacing * static_cast<double>(mm)), 1L, max_step);
      }
      xs.resize(shifts_m.size());
      I.assign(shifts_m.size(), 0.0);
      const long rows = d == 2 ? G.n : 1;
      parallel::for_each_index(I.size(), [&](std::size_t j) {
        const long sft = shifts_m[j];
        xs[j] = static_cast<double>(sft) * L.delta;
        if (sft >= G.n) return;
        double acc = 0.0;
        for (long row = 0; row < rows; ++row)
          acc += K.dot(G.row(row), G.row(row) + sft, static_cast<std::size_t>(G.n - sft));
        I[j] = acc * cell;
      });
      out.far_nodes = I.size();
    }
    auto I_at = [&](double r) { return (I.empty() || r >= diam) ? 0.0 : interp(xs, I, r); };
    std::vector<double> cuts{L.t_out, diam};
    cuts.insert(cuts.end(), xs.begin(), xs.end());
    // rho_tr_bar may oscillate on the unit scale (sine kernel)
    const double width = 0.5;
    far1 = quad::panels(
        [&](double r) {
          return (1.0 - taper(L, r)) * m.rho_tr_bar(r) * I_at(r) * area * std::pow(r, d - 1);
        },
        L.t_in, end, width, cuts);
    far3 = quad::panels(
        [&](double r) {
          return (1.0 - taper(L, r)) * m.rho_tr_bar(r) * (two_n2 - 2.0 * I_at(r)) * area * std::pow(r, d - 1);
        },
        L.t_in, end, width, cuts);
    far3 += two_n2 * m.moment_tail(0, end).value;
  }

  out.vls1 = m.mean_intensity() * G.norm2 + near1 + far1;
  out.vls3 = -0.5 * (near3 + far3);
  return out;
}

double default_delta(const CorrelationModel& m, const ScalarField& f) {
  double delta = f.dim() == 2 ? 0.25 : 0.125;
  if (f.feature() > 0.0) delta = std::min(delta, f.feature() / 8.0);
  const auto& dc = m.decay();
  if (dc.kind == DecayKind::gaussian) delta = std::min(delta, 0.5 / std::sqrt(dc.rate));
  if (dc.kind == DecayKind::exponential) delta = std::min(delta, 0.5 / dc.rate);
  const double cap = f.dim() == 2 ? kMaxCells2 : kMaxCells1;
  return std::max(delta, 2.0 * f.support() / cap);
}

Layout make_layout(const CorrelationModel& m, const ScalarField& f, double delta, double near_cap, double norm2) {
  Layout L;
  L.d = f.dim();
  L.delta = delta;
  const double diam = 2.0 * f.support() + 2.0 * delta;
  // in d = 2 the shift count grows like (T / delta)^2, so fine grids hand
  // over to the radial far field sooner
  const double cap = near_cap > 0.0 ? near_cap : (L.d == 1 ? 64.0 : std::min(16.0, std::max(6.0, 48.0 * delta)));
  // smallest radius past which the correlations are invisible at double precision
  double t = 0.5;
  bool negligible = false;
  while (t <= std::min(cap, diam)) {
    if (2.0 * norm2 * m.decay().tail_mass(L.d, t) < 1e-13) {
      negligible = true;
      break;
    }
    t += 0.5;
  }
  if (negligible) {
    L.t_in = t;
    L.far = false;
  } else {
    L.t_in = std::min(cap, diam);
    L.far = true;
  }
  L.t_out = L.t_in + kTaper;
  return L;
}

}  // namespace

VlsValues evaluate_vls(const CorrelationModel& m, const ScalarField& f, const GridOptions& opts) {
  if (f.dim() != m.dim())
    throw DomainError(fmt::format("field dimension {} does not match model dimension {}", f.dim(), m.dim()));
  if (f.dim() > 2) throw DomainError("variance quadrature is implemented for d = 1, 2");
  VlsValues out;
  if (f.is_zero()) return out;
  if (f.is_constant()) {
    // D_f == 0; vls1 needs a compactly supported f
    if (f.profile(0.0) != 0.0)
      throw DomainError("vls1 is undefined for a non-zero constant field (not compactly supported)");
    return out;
  }
  if (opts.delta < 0.0 || opts.near_radius < 0.0) throw DomainError("grid options must be non-negative");

  // ||f||^2 estimate for the tail test (radial quadrature when possible)
  double norm2_est = 0.0;
  if (f.is_radial()) {
    const double area = unit_sphere_area(f.dim());
    norm2_est = area * quad::panels([&](double r) { return f.profile(r) * f.profile(r) * std::pow(r, f.dim() - 1); },
                                    0.0, f.support(), std::max(0.05, f.support() / 2000.0));
  } else {
    norm2_est = std::pow(2.0 * f.support(), f.dim());
  }

  const bool refine = opts.delta == 0.0 && opts.check_convergence;
  const long cap = f.dim() == 2 ? kRefineCells2 : kMaxCells1;
  double delta = opts.delta > 0.0 ? opts.delta : default_delta(m, f);
  for (int halvings = 0;; ++halvings) {
    const Layout L = make_layout(m, f, delta, opts.near_radius, norm2_est);
    const Sums fine = lattice_sums(m, f, L);
    out.vls1 = fine.vls1;
    out.vls3 = fine.vls3;
    out.norm2 = fine.norm2;
    out.grid.delta = delta;
    out.grid.taper_start = L.t_in;
    out.grid.near_radius = L.t_out;
    out.grid.far_field = L.far;
    out.grid.cells_per_axis = fine.cells;
    out.grid.shifts = fine.shifts;
    out.grid.far_nodes = fine.far_nodes;
    if (!opts.check_convergence) return out;

    Layout coarse = L;
    coarse.delta = 2.0 * delta;
    const Sums c = lattice_sums(m, f, coarse);
    // relative change when the cell size is halved from 2 delta to delta
    auto change = [](double fine_v, double coarse_v) {
      if (fine_v == coarse_v) return 0.0;
      return std::abs(fine_v - coarse_v) / std::max(std::abs(fine_v), 1e-300);
    };
    out.grid.change_vls1 = change(fine.vls1, c.vls1);
    out.grid.change_vls3 = change(fine.vls3, c.vls3);
    // vls1 is reported but not gated: its lattice sum of rho_tr_bar sees any
    // cusp of the correlation at the origin undamped, whereas D_f = O(|u|^2)
    const double worst = out.grid.change_vls3;
    if (worst <= opts.tolerance) return out;
    const long next_cells = 2 * static_cast<long>(std::ceil(f.support() / (0.5 * delta)));
    if (!refine || next_cells > cap || halvings >= kMaxHalvings)
      throw ToleranceError(fmt::format("grid not converged at delta = {}: relative change {:.3g} under halving "
                                       "exceeds {:.3g}",
                                       delta, worst, opts.tolerance),
                           worst);
    delta *= 0.5;
  }
}

double require_superhomogeneous(const CorrelationModel& m) {
  const double defect = superhomogeneity_defect(m, m.default_truncation());
  if (!(std::abs(defect) <= 1e-6))
    throw PreconditionError(
        fmt::format("model '{}' is not superhomogeneous: defect = {:.6g} exceeds 1e-6", m.name(), defect), defect);
  return defect;
}

double variance_vls1(const CorrelationModel& m, const ScalarField& f, const GridOptions& opts) {
  return evaluate_vls(m, f, opts).vls1;
}

double variance_vls3(const CorrelationModel& m, const ScalarField& f, const GridOptions& opts) {
  require_superhomogeneous(m);
  // D_f vanishes identically for a constant field, even where vls1 is undefined
  if (f.is_constant() && f.dim() == m.dim()) return 0.0;
  return evaluate_vls(m, f, opts).vls3;
}

}  // namespace rigidlab

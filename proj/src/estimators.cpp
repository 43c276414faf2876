#include "rigidlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "rigidlab/error.hpp"
#include "rigidlab/parallel.hpp"
#include "rigidlab/samplers.hpp"
#include "rigidlab/simd/kernels.hpp"

namespace rigidlab {

namespace {

constexpr double kZ975 = 1.959963984540054;

const SimulationBox& common_box(const std::vector<PointConfiguration>& samples) {
  const SimulationBox& box = samples.front().box();
  for (const auto& s : samples)
    if (!(s.box() == box)) throw DomainError("all samples must share one simulation box");
  return box;
}

// Translation applied to replica i (zero without jitter).
Point replica_shift(const WindowPlacement& p, const SimulationBox& box, std::size_t i) {
  Point s(box.dim());
  if (!p.jitter) return s;
  Engine eng = make_engine(Seed{p.seed.value, i});
  for (int a = 0; a < box.dim(); ++a) s[a] = uniform01(eng) * box.side();
  return s;
}

Point box_centre(const SimulationBox& box) {
  Point c(box.dim());
  for (int a = 0; a < box.dim(); ++a) c[a] = 0.5 * box.side();
  return c;
}

struct Moments {
  double mean = 0.0, var = 0.0, m4 = 0.0;
};

// Two passes in index order: deterministic for a given input.
Moments moments(const std::vector<double>& x) {
  Moments m;
  const double n = static_cast<double>(x.size());
  for (double v : x) m.mean += v;
  m.mean /= n;
  double s2 = 0.0, s4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    s2 += d * d;
    s4 += d * d * d * d;
  }
  m.var = x.size() > 1 ? s2 / (n - 1.0) : 0.0;
  m.m4 = s4 / n;
  return m;
}

double shell_volume(int dim, double a, double b) {
  switch (dim) {
    case 1: return 2.0 * (b - a);
    case 2: return std::numbers::pi * (b * b - a * a);
    default: return 4.0 / 3.0 * std::numbers::pi * (b * b * b - a * a * a);
  }
}

}  // namespace

nlohmann::json VarianceCurve::to_json() const {
  const char* sh = shape == WindowShape::ball ? "ball" : shape == WindowShape::interval ? "interval" : "square";
  return {{"d", dim},
          {"shape", sh},
          {"radii", radii},
          {"mean_count", mean_count},
          {"var_count", var_count},
          {"ci_halfwidth", ci_halfwidth},
          {"replicas", replicas},
          {"jitter", placement.jitter},
          {"jitter_seed", placement.seed.value}};
}

VarianceCurve number_variance_curve(const std::vector<PointConfiguration>& samples, const std::vector<double>& radii,
                                    const WindowPlacement& placement, std::optional<WindowShape> shape) {
  if (samples.size() < 2)
    throw DomainError(fmt::format("number variance needs at least 2 samples (got {})", samples.size()));
  if (samples.size() < kMinCurveReplicas)
    throw PreconditionError(fmt::format("number variance curves need at least {} replicas (got {})",
                                        kMinCurveReplicas, samples.size()),
                            static_cast<double>(samples.size()));
  if (radii.empty()) throw DomainError("radius list is empty");
  for (std::size_t k = 0; k < radii.size(); ++k)
    if (!(radii[k] > 0.0) || (k > 0 && !(radii[k] > radii[k - 1])))
      throw DomainError("radii must be positive and strictly increasing");
  const SimulationBox& box = common_box(samples);
  const WindowShape sh = shape.value_or(box.dim() == 1 ? WindowShape::interval : WindowShape::ball);
  const Point c = box_centre(box);
  for (double R : radii) ObservationWindow(sh, c, R).validate_for(box);

  const std::size_t n = samples.size(), nr = radii.size();
  std::vector<double> counts(n * nr);
  parallel::for_each_index(n, [&](std::size_t i) {
    const Point s = replica_shift(placement, box, i);
    Point ci(box.dim());
    for (int a = 0; a < box.dim(); ++a) ci[a] = wrap_coordinate(c[a] - s[a], box.side());
    for (std::size_t k = 0; k < nr; ++k)
      counts[i * nr + k] = static_cast<double>(count_in_window(samples[i], ObservationWindow(sh, ci, radii[k])));
  });

  VarianceCurve out;
  out.dim = box.dim();
  out.shape = sh;
  out.radii = radii;
  out.replicas = n;
  out.placement = placement;
  std::vector<double> col(n);
  for (std::size_t k = 0; k < nr; ++k) {
    for (std::size_t i = 0; i < n; ++i) col[i] = counts[i * nr + k];
    const Moments m = moments(col);
    const double nd = static_cast<double>(n);
    // Var(s^2) = (mu4 - sigma^4 (n - 3) / (n - 1)) / n
    const double var_s2 = std::max(0.0, (m.m4 - m.var * m.var * (nd - 3.0) / (nd - 1.0)) / nd);
    out.mean_count.push_back(m.mean);
    out.var_count.push_back(m.var);
    out.ci_halfwidth.push_back(kZ975 * std::sqrt(var_s2));
  }
  return out;
}

nlohmann::json GrowthFit::to_json() const {
  return {{"slope", slope},
          {"stderr", stderr_slope},
          {"intercept", intercept},
          {"d", dim},
          {"verdict", superhomogeneous_consistent ? "superhomogeneous-consistent" : "not-superhomogeneous"}};
}

GrowthFit growth_exponent(const VarianceCurve& curve) {
  const std::size_t n = curve.radii.size();
  if (n < 4 || curve.var_count.size() != n)
    throw DomainError(fmt::format("growth fit needs at least 4 radii (got {})", n));
  if (!(curve.radii.back() >= 4.0 * curve.radii.front()))
    throw DomainError("growth fit radii must span a factor of at least 4");
  std::vector<double> x(n), y(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(curve.var_count[k] > 0.0))
      throw DegenerateFitError(fmt::format("var_count is zero at R = {}; log-log fit undefined", curve.radii[k]));
    x[k] = std::log(curve.radii[k]);
    y[k] = std::log(curve.var_count[k]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  GrowthFit g;
  g.dim = curve.dim;
  g.slope = sxy / sxx;
  g.intercept = my - g.slope * mx;
  double ssr = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = y[k] - g.intercept - g.slope * x[k];
    ssr += r * r;
  }
  g.stderr_slope = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  g.superhomogeneous_consistent = g.slope + 2.0 * g.stderr_slope < static_cast<double>(g.dim);
  return g;
}

nlohmann::json PairCorrelationEstimate::to_json() const {
  return {{"bin_edges", bin_edges}, {"rho_tr_hat", rho_tr_hat}, {"stderr", stderr},   {"pair_counts", pair_counts},
          {"rho_bar", rho_bar},     {"replicas", replicas},     {"bootstrap", bootstrap}};
}

namespace {

// Ordered-pair counts of one configuration in the given bins.
class PairBinner {
 public:
  PairBinner(const std::vector<double>& edges, const SimulationBox& box) : edges_(edges), box_(box) {
    lo2_ = edges.front() * edges.front();
    hi2_ = edges.back() * edges.back();
    width_ = (edges.back() - edges.front()) / static_cast<double>(edges.size() - 1);
    uniform_ = true;
    for (std::size_t k = 0; k < edges.size(); ++k)
      if (std::abs(edges[k] - (edges.front() + width_ * static_cast<double>(k))) > 1e-12 * edges.back())
        uniform_ = false;
    cells_ = static_cast<long>(std::floor(box.side() / edges.back()));
  }

  std::vector<double> operator()(const PointConfiguration& cfg) const {
    std::vector<double> hist(edges_.size() - 1, 0.0);
    const std::size_t n = cfg.size();
    if (n < 2) return hist;
    const int d = box_.dim();
    std::vector<double> buf(n);
    auto tally = [&](const simd::Coords& block, const double* origin, std::size_t skip) {
      simd::kernels().torus_dist2(block, origin, box_.side(), buf.data());
      for (std::size_t j = 0; j < block.n; ++j) {
        if (j == skip) continue;
        const double d2 = buf[j];
        if (d2 < lo2_ || d2 >= hi2_) continue;
        hist[bin(std::sqrt(d2))] += 1.0;
      }
    };

    if (cells_ < 3) {
      simd::Coords all{d, {nullptr, nullptr, nullptr}, n};
      for (int a = 0; a < d; ++a) all.axes[a] = cfg.axis(a).data();
      double origin[3];
      for (std::size_t i = 0; i < n; ++i) {
        for (int a = 0; a < d; ++a) origin[a] = cfg.axis(a)[i];
        tally(all, origin, i);
      }
      return hist;
    }

    // counting sort into cells of side >= r_max
    const long m = cells_;
    const double scale = static_cast<double>(m) / box_.side();
    long total = 1;
    for (int a = 0; a < d; ++a) total *= m;
    std::vector<long> cell_of(n);
    std::vector<std::size_t> start(static_cast<std::size_t>(total) + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      long idx = 0;
      for (int a = d - 1; a >= 0; --a) {
        const long k = std::min(m - 1, static_cast<long>(cfg.axis(a)[i] * scale));
        idx = idx * m + k;
      }
      cell_of[i] = idx;
      ++start[static_cast<std::size_t>(idx) + 1];
    }
    for (long c = 0; c < total; ++c) start[static_cast<std::size_t>(c) + 1] += start[static_cast<std::size_t>(c)];
    std::array<std::vector<double>, 3> sorted;
    for (int a = 0; a < d; ++a) sorted[static_cast<std::size_t>(a)].resize(n);
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t pos = fill[static_cast<std::size_t>(cell_of[i])]++;
      for (int a = 0; a < d; ++a) sorted[static_cast<std::size_t>(a)][pos] = cfg.axis(a)[i];
    }

    std::vector<long> offsets;
    const long span = d == 1 ? 3 : d == 2 ? 9 : 27;
    for (long t = 0; t < span; ++t) offsets.push_back(t);
    std::array<long, 3> ck{}, nk{};
    double origin[3];
    for (long c = 0; c < total; ++c) {
      long rest = c;
      for (int a = 0; a < d; ++a) {
        ck[static_cast<std::size_t>(a)] = rest % m;
        rest /= m;
      }
      for (long t : offsets) {
        long code = t, idx = 0, mul = 1;
        for (int a = 0; a < d; ++a) {
          const long delta = code % 3 - 1;
          code /= 3;
          nk[static_cast<std::size_t>(a)] = (ck[static_cast<std::size_t>(a)] + delta + m) % m;
          idx += nk[static_cast<std::size_t>(a)] * mul;
          mul *= m;
        }
        const std::size_t b0 = start[static_cast<std::size_t>(idx)], b1 = start[static_cast<std::size_t>(idx) + 1];
        if (b0 == b1) continue;
        simd::Coords block{d, {nullptr, nullptr, nullptr}, b1 - b0};
        for (int a = 0; a < d; ++a) block.axes[a] = sorted[static_cast<std::size_t>(a)].data() + b0;
        for (std::size_t p = start[static_cast<std::size_t>(c)]; p < start[static_cast<std::size_t>(c) + 1]; ++p) {
          for (int a = 0; a < d; ++a) origin[a] = sorted[static_cast<std::size_t>(a)][p];
          const std::size_t skip = idx == c ? p - b0 : static_cast<std::size_t>(-1);
          tally(block, origin, skip);
        }
      }
    }
    return hist;
  }

 private:
  std::size_t bin(double r) const {
    const std::size_t nb = edges_.size() - 1;
    std::size_t k;
    if (uniform_) {
      k = static_cast<std::size_t>(std::max(0.0, std::floor((r - edges_.front()) / width_)));
      k = std::min(k, nb - 1);
      // rounding near an edge: settle against the stored edges
      while (k > 0 && r < edges_[k]) --k;
      while (k + 1 < nb && r >= edges_[k + 1]) ++k;
    } else {
      k = static_cast<std::size_t>(std::upper_bound(edges_.begin(), edges_.end(), r) - edges_.begin()) - 1;
      k = std::min(k, nb - 1);
    }
    return k;
  }

  std::vector<double> edges_;
  SimulationBox box_;
  double lo2_ = 0.0, hi2_ = 0.0, width_ = 0.0;
  bool uniform_ = false;
  long cells_ = 0;
};

}  // namespace

PairCorrelationEstimate pair_correlation_hist(const std::vector<PointConfiguration>& samples, double bin_width,
                                              double r_max, const BootstrapOptions& boot) {
  if (!(bin_width > 0.0) || !(r_max > 0.0)) throw DomainError("bin width and r_max must be positive");
  const auto nb = static_cast<std::size_t>(std::ceil(r_max / bin_width - 1e-9));
  std::vector<double> edges(nb + 1);
  for (std::size_t k = 0; k <= nb; ++k) edges[k] = std::min(r_max, bin_width * static_cast<double>(k));
  edges.back() = r_max;
  return pair_correlation_hist(samples, edges, boot);
}

PairCorrelationEstimate pair_correlation_hist(const std::vector<PointConfiguration>& samples,
                                              const std::vector<double>& edges, const BootstrapOptions& boot) {
  if (samples.empty()) throw DomainError("pair correlation needs at least one sample");
  if (edges.size() < 2) throw DomainError("pair correlation needs at least one bin");
  for (std::size_t k = 0; k < edges.size(); ++k)
    if (!(edges[k] >= 0.0) || (k > 0 && !(edges[k] > edges[k - 1])))
      throw DomainError("bin edges must be non-negative and strictly increasing");
  const SimulationBox& box = common_box(samples);
  if (edges.back() > 0.5 * box.side())
    throw DomainError(fmt::format("r_max = {} exceeds L/2 = {}", edges.back(), 0.5 * box.side()));

  const std::size_t n = samples.size(), nb = edges.size() - 1;
  const PairBinner binner(edges, box);
  std::vector<std::vector<double>> hist(n);
  std::vector<double> sizes(n);
  parallel::for_each_index(n, [&](std::size_t i) {
    hist[i] = binner(samples[i]);
    sizes[i] = static_cast<double>(samples[i].size());
  });

  const double vol = box.volume();
  std::vector<double> shell(nb);
  for (std::size_t k = 0; k < nb; ++k) shell[k] = shell_volume(box.dim(), edges[k], edges[k + 1]);
  auto estimate = [&](const std::vector<double>& pairs, double points, double reps, std::vector<double>& out) {
    const double rho = points / reps / vol;
    for (std::size_t k = 0; k < nb; ++k) out[k] = pairs[k] / (reps * vol * shell[k]) - rho * rho;
    return rho;
  };

  PairCorrelationEstimate est;
  est.bin_edges = edges;
  est.replicas = n;
  est.pair_counts.assign(nb, 0.0);
  double points = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < nb; ++k) est.pair_counts[k] += hist[i][k];
    points += sizes[i];
  }
  est.rho_tr_hat.resize(nb);
  est.rho_bar = estimate(est.pair_counts, points, static_cast<double>(n), est.rho_tr_hat);

  // bootstrap over replicas
  est.bootstrap = boot.resamples;
  est.stderr.assign(nb, 0.0);
  if (boot.resamples >= 2 && n >= 2) {
    Engine eng = make_engine(boot.seed);
    std::vector<double> mean(nb, 0.0), m2(nb, 0.0), pairs(nb), value(nb);
    for (std::size_t b = 0; b < boot.resamples; ++b) {
      std::fill(pairs.begin(), pairs.end(), 0.0);
      double pts = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const auto i = std::min(n - 1, static_cast<std::size_t>(uniform01(eng) * static_cast<double>(n)));
        for (std::size_t k = 0; k < nb; ++k) pairs[k] += hist[i][k];
        pts += sizes[i];
      }
      estimate(pairs, pts, static_cast<double>(n), value);
      const double cnt = static_cast<double>(b + 1);
      for (std::size_t k = 0; k < nb; ++k) {
        const double delta = value[k] - mean[k];
        mean[k] += delta / cnt;
        m2[k] += delta * (value[k] - mean[k]);
      }
    }
    for (std::size_t k = 0; k < nb; ++k) est.stderr[k] = std::sqrt(m2[k] / static_cast<double>(boot.resamples - 1));
  }
  return est;
}

nlohmann::json LinearStatistic::to_json() const {
  return {{"mean", mean}, {"variance", variance}, {"ci_halfwidth", ci_halfwidth}, {"replicas", replicas},
          {"batches", batches}};
}

LinearStatistic linear_statistic_variance(const std::vector<PointConfiguration>& samples, const BoxField& f,
                                          const WindowPlacement& placement, std::size_t batches) {
  if (samples.size() < 2)
    throw DomainError(fmt::format("linear statistic variance needs at least 2 samples (got {})", samples.size()));
  if (!f) throw DomainError("linear statistic needs a field");
  const SimulationBox& box = common_box(samples);
  const std::size_t n = samples.size();
  std::vector<double> S(n);
  parallel::for_each_index(n, [&](std::size_t i) {
    const Point s = replica_shift(placement, box, i);
    const PointConfiguration& cfg = samples[i];
    Point x(box.dim());
    double acc = 0.0;
    for (std::size_t j = 0; j < cfg.size(); ++j) {
      for (int a = 0; a < box.dim(); ++a) x[a] = wrap_coordinate(cfg.axis(a)[j] + s[a], box.side());
      acc += f(x);
    }
    S[i] = acc;
  });

  LinearStatistic out;
  out.replicas = n;
  const Moments m = moments(S);
  out.mean = m.mean;
  out.variance = m.var;
  const std::size_t nb = std::min(batches, n / 2);
  out.batches = nb;
  if (nb < 2) {
    out.ci_halfwidth = std::numeric_limits<double>::infinity();
    return out;
  }
  std::vector<double> bvar(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = b * n / nb, hi = (b + 1) * n / nb;
    bvar[b] = moments(std::vector<double>(S.begin() + static_cast<long>(lo), S.begin() + static_cast<long>(hi))).var;
  }
  const Moments bm = moments(bvar);
  const boost::math::students_t t(static_cast<double>(nb - 1));
  out.ci_halfwidth = boost::math::quantile(t, 0.975) * std::sqrt(bm.var / static_cast<double>(nb));
  return out;
}

BoxField centered_radial_field(const SimulationBox& box, std::function<double(double)> profile) {
  const Point c = box_centre(box);
  return [box, c, profile = std::move(profile)](const Point& x) {
    return profile(torus_distance(c, x, box));
  };
}

}  // namespace rigidlab

#pragma once

// Empirical statistics over replicas: number-variance curves, the truncated
// pair-correlation histogram and linear-statistic variances.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rigidlab/core.hpp"

namespace rigidlab {

inline constexpr std::size_t kMinCurveReplicas = 100;

/// Per-replica placement of the observation window. With `jitter` the
/// configuration of replica i is translated (mod L) by a uniform vector drawn
/// from Seed{seed.value, i}; otherwise windows sit at the box centre.
struct WindowPlacement {
  bool jitter = false;
  Seed seed{};
};

struct VarianceCurve {
  int dim = 0;
  WindowShape shape = WindowShape::ball;
  std::vector<double> radii;
  std::vector<double> mean_count;
  std::vector<double> var_count;
  std::vector<double> ci_halfwidth;  // 95%, normal approximation
  std::size_t replicas = 0;
  WindowPlacement placement;
  nlohmann::json to_json() const;
};

/// Interval windows in d = 1, balls otherwise unless `shape` is given.
VarianceCurve number_variance_curve(const std::vector<PointConfiguration>& samples, const std::vector<double>& radii,
                                    const WindowPlacement& placement = {},
                                    std::optional<WindowShape> shape = std::nullopt);

struct GrowthFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
  int dim = 0;
  bool superhomogeneous_consistent = false;  // slope + 2 stderr < d
  nlohmann::json to_json() const;
};

/// Least squares of log var_count on log R.
GrowthFit growth_exponent(const VarianceCurve& curve);

struct PairCorrelationEstimate {
  std::vector<double> bin_edges;
  std::vector<double> rho_tr_hat;
  std::vector<double> stderr;
  std::vector<double> pair_counts;  // ordered pairs summed over replicas
  double rho_bar = 0.0;
  std::size_t replicas = 0;
  std::size_t bootstrap = 0;
  nlohmann::json to_json() const;
};

struct BootstrapOptions {
  std::size_t resamples = 200;
  Seed seed{};
};

/// Bins [k w, (k + 1) w) covering (0, r_max]; r_max <= L / 2.
PairCorrelationEstimate pair_correlation_hist(const std::vector<PointConfiguration>& samples, double bin_width,
                                              double r_max, const BootstrapOptions& boot = {});
/// Arbitrary increasing edges with edges.back() <= L / 2.
PairCorrelationEstimate pair_correlation_hist(const std::vector<PointConfiguration>& samples,
                                              const std::vector<double>& edges, const BootstrapOptions& boot = {});

struct LinearStatistic {
  double mean = 0.0;
  double variance = 0.0;
  double ci_halfwidth = 0.0;  // 95%, Student t over batch variances
  std::size_t replicas = 0;
  std::size_t batches = 0;
  nlohmann::json to_json() const;
};

/// Field evaluated at absolute box coordinates.
using BoxField = std::function<double(const Point&)>;

/// Sample variance of S_i = sum_x f(x) over replicas, CI from >= 20 batches.
LinearStatistic linear_statistic_variance(const std::vector<PointConfiguration>& samples, const BoxField& f,
                                          const WindowPlacement& placement = {}, std::size_t batches = 20);

/// f(|minimal_image(x - centre)|) with the centre at the middle of the box.
BoxField centered_radial_field(const SimulationBox& box, std::function<double(double)> profile);

}  // namespace rigidlab

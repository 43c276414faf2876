#pragma once

// Geometric primitives shared by every module: points, periodic boxes,
// observation windows and the seeded randomness contract.

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace rigidlab {

inline constexpr int kMaxDim = 3;

/// A point (or displacement) in R^d, d in {1,2,3}.
class Point {
 public:
  Point() = default;
  explicit Point(int dim);
  Point(std::initializer_list<double> coords);

  int dim() const noexcept { return dim_; }
  double operator[](int i) const noexcept { return c_[static_cast<std::size_t>(i)]; }
  double& operator[](int i) noexcept { return c_[static_cast<std::size_t>(i)]; }

  double norm2() const noexcept;
  double norm() const noexcept;

  Point operator-() const noexcept;
  friend bool operator==(const Point& a, const Point& b) noexcept;

 private:
  std::array<double, kMaxDim> c_{};
  int dim_ = 0;
};

/// Periodic cubic box [0, L)^d.
class SimulationBox {
 public:
  SimulationBox(int dim, double side);

  int dim() const noexcept { return dim_; }
  double side() const noexcept { return side_; }
  bool periodic() const noexcept { return true; }
  double volume() const noexcept;

  friend bool operator==(const SimulationBox&, const SimulationBox&) = default;

 private:
  int dim_;
  double side_;
};

/// Finite point set in a periodic box. Coordinates are stored one axis per
/// array so window counts and distance sweeps stream contiguous memory.
class PointConfiguration {
 public:
  explicit PointConfiguration(SimulationBox box);
  PointConfiguration(SimulationBox box, std::span<const Point> points);

  const SimulationBox& box() const noexcept { return box_; }
  std::size_t size() const noexcept { return axes_[0].size(); }
  bool empty() const noexcept { return size() == 0; }

  /// Appends a point; it must lie in [0, L)^d.
  void add(const Point& p);
  /// Appends without the range check; the caller guarantees [0, L)^d.
  void add_unchecked(const Point& p);
  void reserve(std::size_t n);

  Point point(std::size_t i) const;
  std::span<const double> axis(int a) const noexcept { return axes_[static_cast<std::size_t>(a)]; }

  friend bool operator==(const PointConfiguration&, const PointConfiguration&) = default;

 private:
  SimulationBox box_;
  std::array<std::vector<double>, kMaxDim> axes_;
};

enum class WindowShape { ball, interval, square };

/// Bounded observation domain centred at `center`. Balls are closed
/// (|v| <= R); squares and intervals are half-open (-R <= v_i < R) so that
/// they tile the box without double counting.
class ObservationWindow {
 public:
  ObservationWindow(WindowShape shape, Point center, double radius);

  WindowShape shape() const noexcept { return shape_; }
  const Point& center() const noexcept { return center_; }
  double radius() const noexcept { return radius_; }

  /// Throws DomainError unless the window fits the box: matching dimension,
  /// center inside, and 2R + R <= L so that no point is seen twice through
  /// the torus.
  void validate_for(const SimulationBox& box) const;
  bool fits(const SimulationBox& box) const noexcept;

 private:
  WindowShape shape_;
  Point center_;
  double radius_;
};

/// Seed of a reproducible random stream. Identical (value, stream) pairs
/// reproduce identical sequences; replicas differ by stream.
struct Seed {
  std::uint64_t value = 0;
  std::uint64_t stream = 0;

  friend bool operator==(const Seed&, const Seed&) = default;
};

using Engine = std::mt19937_64;

Engine make_engine(Seed seed);

/// Minimal-image displacement v with a + v = b (mod L), |v_i| <= L/2.
Point torus_displacement(const Point& a, const Point& b, const SimulationBox& box);
double torus_distance(const Point& a, const Point& b, const SimulationBox& box);

std::size_t count_in_window(const PointConfiguration& config, const ObservationWindow& w);

ObservationWindow scale_window(const ObservationWindow& w, double factor, const SimulationBox& box);

/// Wraps x into [0, L).
double wrap_coordinate(double x, double side) noexcept;

}  // namespace rigidlab

#include "rigidlab/core.hpp"

#include <cmath>
#include <string>

#include <fmt/format.h>

#include "rigidlab/error.hpp"
#include "rigidlab/simd/kernels.hpp"
#include "simd/min_image.hpp"

namespace rigidlab {

namespace {

void check_dim(int d) {
  if (d < 1 || d > kMaxDim) throw DomainError(fmt::format("dimension must be 1, 2 or 3 (got {})", d));
}

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Point::Point(int dim) : dim_(dim) { check_dim(dim); }

Point::Point(std::initializer_list<double> coords) : dim_(static_cast<int>(coords.size())) {
  check_dim(dim_);
  std::size_t i = 0;
  for (double c : coords) c_[i++] = c;
}

double Point::norm2() const noexcept {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i) s += c_[static_cast<std::size_t>(i)] * c_[static_cast<std::size_t>(i)];
  return s;
}

double Point::norm() const noexcept { return std::sqrt(norm2()); }

Point Point::operator-() const noexcept {
  Point p = *this;
  for (int i = 0; i < dim_; ++i) p[i] = -p[i];
  return p;
}

bool operator==(const Point& a, const Point& b) noexcept {
  if (a.dim_ != b.dim_) return false;
  for (int i = 0; i < a.dim_; ++i)
    if (a[i] != b[i]) return false;
  return true;
}

SimulationBox::SimulationBox(int dim, double side) : dim_(dim), side_(side) {
  check_dim(dim);
  if (!(side > 0.0) || !std::isfinite(side))
    throw DomainError(fmt::format("box side must be positive and finite (got {})", side));
}

double SimulationBox::volume() const noexcept { return std::pow(side_, dim_); }

PointConfiguration::PointConfiguration(SimulationBox box) : box_(box) {}

PointConfiguration::PointConfiguration(SimulationBox box, std::span<const Point> points) : box_(box) {
  reserve(points.size());
  for (const auto& p : points) add(p);
}

void PointConfiguration::add(const Point& p) {
  if (p.dim() != box_.dim())
    throw DomainError(fmt::format("point dimension {} does not match box dimension {}", p.dim(), box_.dim()));
  for (int a = 0; a < box_.dim(); ++a) {
    if (!std::isfinite(p[a]) || p[a] < 0.0 || p[a] >= box_.side())
      throw DomainError(fmt::format("coordinate {} outside [0, {})", p[a], box_.side()));
  }
  add_unchecked(p);
}

void PointConfiguration::add_unchecked(const Point& p) {
  for (int a = 0; a < box_.dim(); ++a) axes_[static_cast<std::size_t>(a)].push_back(p[a]);
}

void PointConfiguration::reserve(std::size_t n) {
  for (int a = 0; a < box_.dim(); ++a) axes_[static_cast<std::size_t>(a)].reserve(n);
}

Point PointConfiguration::point(std::size_t i) const {
  Point p(box_.dim());
  for (int a = 0; a < box_.dim(); ++a) p[a] = axes_[static_cast<std::size_t>(a)].at(i);
  return p;
}

ObservationWindow::ObservationWindow(WindowShape shape, Point center, double radius)
    : shape_(shape), center_(center), radius_(radius) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw DomainError(fmt::format("window radius must be positive (got {})", radius));
  if (shape == WindowShape::interval && center.dim() != 1) throw DomainError("interval windows are one-dimensional");
  if (shape == WindowShape::square && center.dim() < 2) throw DomainError("square windows need d >= 2");
}

bool ObservationWindow::fits(const SimulationBox& box) const noexcept {
  if (center_.dim() != box.dim()) return false;
  for (int a = 0; a < box.dim(); ++a)
    if (!(center_[a] >= 0.0 && center_[a] < box.side())) return false;
  return 3.0 * radius_ <= box.side();
}

void ObservationWindow::validate_for(const SimulationBox& box) const {
  if (center_.dim() != box.dim())
    throw DomainError(fmt::format("window dimension {} does not match box dimension {}", center_.dim(), box.dim()));
  if (!fits(box))
    throw DomainError(fmt::format("window of radius {} violates the box margin (need 3R <= L = {})", radius_,
                                  box.side()));
}

Engine make_engine(Seed seed) {
  std::uint64_t s = seed.value;
  const std::uint64_t a = splitmix64(s);
  s ^= seed.stream * 0xd1b54a32d192ed03ULL;
  const std::uint64_t b = splitmix64(s);
  const std::uint64_t c = splitmix64(s);
  const std::uint64_t d = splitmix64(s);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                    static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(d >> 32),
                    static_cast<std::uint32_t>(seed.stream), static_cast<std::uint32_t>(seed.stream >> 32)};
  return Engine(seq);
}

Point torus_displacement(const Point& a, const Point& b, const SimulationBox& box) {
  if (a.dim() != box.dim() || b.dim() != box.dim())
    throw DomainError(fmt::format("dimension mismatch: {} / {} in a d={} box", a.dim(), b.dim(), box.dim()));
  Point v(box.dim());
  for (int i = 0; i < box.dim(); ++i) v[i] = simd::min_image(b[i] - a[i], box.side());
  return v;
}

double torus_distance(const Point& a, const Point& b, const SimulationBox& box) {
  return torus_displacement(a, b, box).norm();
}

std::size_t count_in_window(const PointConfiguration& config, const ObservationWindow& w) {
  const auto& box = config.box();
  w.validate_for(box);
  if (config.empty()) return 0;
  simd::Coords pts;
  pts.dim = box.dim();
  pts.n = config.size();
  for (int a = 0; a < box.dim(); ++a) pts.axes[a] = config.axis(a).data();
  double c[kMaxDim] = {0.0, 0.0, 0.0};
  for (int a = 0; a < box.dim(); ++a) c[a] = w.center()[a];
  const auto& k = simd::kernels();
  if (w.shape() == WindowShape::ball) return k.count_ball(pts, c, w.radius() * w.radius(), box.side());
  return k.count_box(pts, c, w.radius(), box.side());
}

ObservationWindow scale_window(const ObservationWindow& w, double factor, const SimulationBox& box) {
  if (!(factor > 0.0) || !std::isfinite(factor))
    throw DomainError(fmt::format("scale factor must be positive (got {})", factor));
  ObservationWindow out(w.shape(), w.center(), w.radius() * factor);
  out.validate_for(box);
  return out;
}

double wrap_coordinate(double x, double side) noexcept {
  double r = std::fmod(x, side);
  if (r < 0.0) r += side;
  // fmod of a tiny negative value can round up to exactly `side`
  if (r >= side) r = 0.0;
  return r;
}

}  // namespace rigidlab

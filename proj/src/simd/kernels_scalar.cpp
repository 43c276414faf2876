// Scalar reference kernels. These define the semantics the vector variants
// are tested against; keep them simple.

#include "rigidlab/simd/kernels.hpp"

#include <cmath>

#include "min_image.hpp"

namespace rigidlab::simd {
namespace {

SqDiffDot sq_diff_dot_ref(const double* x, const double* y, std::size_t n) {
  SqDiffDot r;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    r.sq_diff += d * d;
    r.dot += x[i] * y[i];
  }
  return r;
}

double dot_ref(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

std::size_t count_ball_ref(const Coords& pts, const double* center, double r2, double side) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < pts.n; ++i) {
    double d2 = 0.0;
    for (int a = 0; a < pts.dim; ++a) {
      const double v = min_image(pts.axes[a][i] - center[a], side);
      d2 += v * v;
    }
    count += d2 <= r2 ? 1 : 0;
  }
  return count;
}

std::size_t count_box_ref(const Coords& pts, const double* center, double half, double side) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < pts.n; ++i) {
    bool inside = true;
    for (int a = 0; a < pts.dim; ++a) {
      const double v = min_image(pts.axes[a][i] - center[a], side);
      inside = inside && v >= -half && v < half;
    }
    count += inside ? 1 : 0;
  }
  return count;
}

void torus_dist2_ref(const Coords& pts, const double* origin, double side, double* out) {
  for (std::size_t i = 0; i < pts.n; ++i) {
    double d2 = 0.0;
    for (int a = 0; a < pts.dim; ++a) {
      const double v = min_image(pts.axes[a][i] - origin[a], side);
      d2 += v * v;
    }
    out[i] = d2;
  }
}

}  // namespace

namespace scalar {
const KernelTable table{
    Backend::scalar, sq_diff_dot_ref, dot_ref, count_ball_ref, count_box_ref, torus_dist2_ref,
};
}

}  // namespace rigidlab::simd

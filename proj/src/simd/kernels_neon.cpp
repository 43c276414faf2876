// NEON kernels for AArch64. Advanced SIMD is mandatory there, so no runtime
// probe is needed beyond the compile-time guard.

#if defined(__aarch64__) || defined(_M_ARM64)

#include <arm_neon.h>

#include "min_image.hpp"
#include "rigidlab/simd/kernels.hpp"

namespace rigidlab::simd {
namespace {

inline float64x2_t min_image_v(float64x2_t v, float64x2_t side) {
  const float64x2_t k = vrndnq_f64(vdivq_f64(v, side));
  return vsubq_f64(v, vmulq_f64(side, k));
}

SqDiffDot sq_diff_dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t sd0 = vdupq_n_f64(0.0), sd1 = vdupq_n_f64(0.0);
  float64x2_t dp0 = vdupq_n_f64(0.0), dp1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float64x2_t x0 = vld1q_f64(x + i), x1 = vld1q_f64(x + i + 2);
    const float64x2_t y0 = vld1q_f64(y + i), y1 = vld1q_f64(y + i + 2);
    const float64x2_t d0 = vsubq_f64(x0, y0), d1 = vsubq_f64(x1, y1);
    sd0 = vfmaq_f64(sd0, d0, d0);
    sd1 = vfmaq_f64(sd1, d1, d1);
    dp0 = vfmaq_f64(dp0, x0, y0);
    dp1 = vfmaq_f64(dp1, x1, y1);
  }
  SqDiffDot r{vaddvq_f64(vaddq_f64(sd0, sd1)), vaddvq_f64(vaddq_f64(dp0, dp1))};
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    r.sq_diff += d * d;
    r.dot += x[i] * y[i];
  }
  return r;
}

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t a0 = vdupq_n_f64(0.0), a1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 = vfmaq_f64(a0, vld1q_f64(x + i), vld1q_f64(y + i));
    a1 = vfmaq_f64(a1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(a0, a1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

inline float64x2_t dist2_pair(const Coords& pts, std::size_t i, const float64x2_t* c, float64x2_t side) {
  float64x2_t d2 = vdupq_n_f64(0.0);
  for (int a = 0; a < pts.dim; ++a) {
    const float64x2_t v = min_image_v(vsubq_f64(vld1q_f64(pts.axes[a] + i), c[a]), side);
    d2 = vaddq_f64(d2, vmulq_f64(v, v));
  }
  return d2;
}

double dist2_one(const Coords& pts, std::size_t i, const double* origin, double side) {
  double d2 = 0.0;
  for (int a = 0; a < pts.dim; ++a) {
    const double v = min_image(pts.axes[a][i] - origin[a], side);
    d2 += v * v;
  }
  return d2;
}

std::size_t count_ball_neon(const Coords& pts, const double* center, double r2, double side) {
  float64x2_t c[3];
  for (int a = 0; a < pts.dim; ++a) c[a] = vdupq_n_f64(center[a]);
  const float64x2_t vs = vdupq_n_f64(side), vr2 = vdupq_n_f64(r2);
  uint64x2_t acc = vdupq_n_u64(0);
  std::size_t i = 0;
  for (; i + 2 <= pts.n; i += 2) {
    const uint64x2_t in = vcleq_f64(dist2_pair(pts, i, c, vs), vr2);
    acc = vsubq_u64(acc, vreinterpretq_u64_s64(vreinterpretq_s64_u64(in)));
  }
  // each true lane is all-ones (= -1), so subtracting counts it once
  std::size_t count = static_cast<std::size_t>(vaddvq_u64(acc));
  for (; i < pts.n; ++i) count += dist2_one(pts, i, center, side) <= r2 ? 1 : 0;
  return count;
}

std::size_t count_box_neon(const Coords& pts, const double* center, double half, double side) {
  float64x2_t c[3];
  for (int a = 0; a < pts.dim; ++a) c[a] = vdupq_n_f64(center[a]);
  const float64x2_t vs = vdupq_n_f64(side), hi = vdupq_n_f64(half), lo = vdupq_n_f64(-half);
  uint64x2_t acc = vdupq_n_u64(0);
  std::size_t i = 0;
  for (; i + 2 <= pts.n; i += 2) {
    uint64x2_t in = vdupq_n_u64(~0ULL);
    for (int a = 0; a < pts.dim; ++a) {
      const float64x2_t v = min_image_v(vsubq_f64(vld1q_f64(pts.axes[a] + i), c[a]), vs);
      in = vandq_u64(in, vandq_u64(vcgeq_f64(v, lo), vcltq_f64(v, hi)));
    }
    acc = vsubq_u64(acc, in);
  }
  std::size_t count = static_cast<std::size_t>(vaddvq_u64(acc));
  for (; i < pts.n; ++i) {
    bool inside = true;
    for (int a = 0; a < pts.dim; ++a) {
      const double v = min_image(pts.axes[a][i] - center[a], side);
      inside = inside && v >= -half && v < half;
    }
    count += inside ? 1 : 0;
  }
  return count;
}

void torus_dist2_neon(const Coords& pts, const double* origin, double side, double* out) {
  float64x2_t c[3];
  for (int a = 0; a < pts.dim; ++a) c[a] = vdupq_n_f64(origin[a]);
  const float64x2_t vs = vdupq_n_f64(side);
  std::size_t i = 0;
  for (; i + 2 <= pts.n; i += 2) vst1q_f64(out + i, dist2_pair(pts, i, c, vs));
  for (; i < pts.n; ++i) out[i] = dist2_one(pts, i, origin, side);
}

}  // namespace

namespace neon {
extern const KernelTable table;
const KernelTable table{
    Backend::neon, sq_diff_dot_neon, dot_neon, count_ball_neon, count_box_neon, torus_dist2_neon,
};
}  // namespace neon

}  // namespace rigidlab::simd

#endif

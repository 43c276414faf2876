// AVX2 + FMA kernels. Compiled with -mavx2 -mfma; only reached after the
// runtime CPU check in dispatch.cpp.

#include <immintrin.h>

#include <cstdint>

#include "min_image.hpp"
#include "rigidlab/simd/kernels.hpp"

namespace rigidlab::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d min_image_v(__m256d v, __m256d side, __m256d inv_side_unused) {
  (void)inv_side_unused;
  const __m256d k = _mm256_round_pd(_mm256_div_pd(v, side), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  return _mm256_sub_pd(v, _mm256_mul_pd(side, k));
}

SqDiffDot sq_diff_dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d sd0 = _mm256_setzero_pd(), sd1 = _mm256_setzero_pd();
  __m256d dp0 = _mm256_setzero_pd(), dp1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d x0 = _mm256_loadu_pd(x + i), x1 = _mm256_loadu_pd(x + i + 4);
    const __m256d y0 = _mm256_loadu_pd(y + i), y1 = _mm256_loadu_pd(y + i + 4);
    const __m256d d0 = _mm256_sub_pd(x0, y0), d1 = _mm256_sub_pd(x1, y1);
    sd0 = _mm256_fmadd_pd(d0, d0, sd0);
    sd1 = _mm256_fmadd_pd(d1, d1, sd1);
    dp0 = _mm256_fmadd_pd(x0, y0, dp0);
    dp1 = _mm256_fmadd_pd(x1, y1, dp1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d x0 = _mm256_loadu_pd(x + i), y0 = _mm256_loadu_pd(y + i);
    const __m256d d0 = _mm256_sub_pd(x0, y0);
    sd0 = _mm256_fmadd_pd(d0, d0, sd0);
    dp0 = _mm256_fmadd_pd(x0, y0, dp0);
  }
  SqDiffDot r{hsum(_mm256_add_pd(sd0, sd1)), hsum(_mm256_add_pd(dp0, dp1))};
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    r.sq_diff += d * d;
    r.dot += x[i] * y[i];
  }
  return r;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    a2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), a2);
    a3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), a3);
  }
  for (; i + 4 <= n; i += 4) a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  double s = hsum(_mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3)));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

// Squared minimal-image distance of lanes [i, i+4). Same operation order as
// the scalar reference so results agree bit for bit.
inline __m256d dist2_block(const Coords& pts, std::size_t i, const __m256d* c, __m256d side) {
  __m256d d2 = _mm256_setzero_pd();
  for (int a = 0; a < pts.dim; ++a) {
    const __m256d v = min_image_v(_mm256_sub_pd(_mm256_loadu_pd(pts.axes[a] + i), c[a]), side, side);
    d2 = _mm256_add_pd(d2, _mm256_mul_pd(v, v));
  }
  return d2;
}

std::size_t count_ball_avx2(const Coords& pts, const double* center, double r2, double side) {
  __m256d c[3];
  for (int a = 0; a < pts.dim; ++a) c[a] = _mm256_set1_pd(center[a]);
  const __m256d vs = _mm256_set1_pd(side), vr2 = _mm256_set1_pd(r2);
  std::size_t count = 0, i = 0;
  for (; i + 4 <= pts.n; i += 4) {
    const __m256d inside = _mm256_cmp_pd(dist2_block(pts, i, c, vs), vr2, _CMP_LE_OQ);
    count += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(inside))));
  }
  for (; i < pts.n; ++i) {
    double d2 = 0.0;
    for (int a = 0; a < pts.dim; ++a) {
      const double v = min_image(pts.axes[a][i] - center[a], side);
      d2 += v * v;
    }
    count += d2 <= r2 ? 1 : 0;
  }
  return count;
}

std::size_t count_box_avx2(const Coords& pts, const double* center, double half, double side) {
  __m256d c[3];
  for (int a = 0; a < pts.dim; ++a) c[a] = _mm256_set1_pd(center[a]);
  const __m256d vs = _mm256_set1_pd(side);
  const __m256d hi = _mm256_set1_pd(half), lo = _mm256_set1_pd(-half);
  std::size_t count = 0, i = 0;
  for (; i + 4 <= pts.n; i += 4) {
    __m256d inside = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
    for (int a = 0; a < pts.dim; ++a) {
      const __m256d v = min_image_v(_mm256_sub_pd(_mm256_loadu_pd(pts.axes[a] + i), c[a]), vs, vs);
      inside = _mm256_and_pd(inside, _mm256_cmp_pd(v, lo, _CMP_GE_OQ));
      inside = _mm256_and_pd(inside, _mm256_cmp_pd(v, hi, _CMP_LT_OQ));
    }
    count += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(inside))));
  }
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

void torus_dist2_avx2(const Coords& pts, const double* origin, double side, double* out) {
  __m256d c[3];
  for (int a = 0; a < pts.dim; ++a) c[a] = _mm256_set1_pd(origin[a]);
  const __m256d vs = _mm256_set1_pd(side);
  std::size_t i = 0;
  for (; i + 4 <= pts.n; i += 4) _mm256_storeu_pd(out + i, dist2_block(pts, i, c, vs));
  for (; i < pts.n; ++i) {
    double d2 = 0.0;
    for (int a = 0; a < pts.dim; ++a) {
      const double v = min_image(pts.axes[a][i] - origin[a], side);
      d2 += v * v;
    }
    out[i] = d2;
  }
}

}  // namespace

namespace avx2 {
extern const KernelTable table;
const KernelTable table{
    Backend::avx2, sq_diff_dot_avx2, dot_avx2, count_ball_avx2, count_box_avx2, torus_dist2_avx2,
};
}  // namespace avx2

}  // namespace rigidlab::simd

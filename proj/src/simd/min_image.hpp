#pragma once

#include <cmath>

namespace rigidlab::simd {

// Minimal-image component. nearbyint (ties-to-even under the default
// rounding mode) matches _mm256_round_pd / vrndnq_f64 bit for bit.
inline double min_image(double v, double side) noexcept {
  return v - side * std::nearbyint(v / side);
}

}  // namespace rigidlab::simd

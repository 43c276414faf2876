#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference version;
// vector variants (AVX2+FMA on x86-64, NEON on AArch64) are selected once at
// runtime from the CPU features, and can be pinned with RIGIDLAB_SIMD=
// scalar|avx2|neon|auto. The variants agree with the reference exactly on
// counts and to reassociation rounding on reductions.

#include <cstddef>
#include <string_view>

namespace rigidlab::simd {

enum class Backend { scalar, avx2, neon };

std::string_view to_string(Backend b) noexcept;

struct SqDiffDot {
  double sq_diff = 0.0;  // sum (x_i - y_i)^2
  double dot = 0.0;      // sum x_i * y_i
};

/// Structure-of-arrays view of a point set: axes[0..dim) each of length n.
struct Coords {
  int dim = 0;
  const double* axes[3] = {nullptr, nullptr, nullptr};
  std::size_t n = 0;
};

struct KernelTable {
  Backend backend;

  SqDiffDot (*sq_diff_dot)(const double* x, const double* y, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);

  /// #{i : |minimal_image(p_i - center)|^2 <= r2}
  std::size_t (*count_ball)(const Coords& pts, const double* center, double r2, double side);
  /// #{i : -half <= minimal_image(p_i - center)_k < half for every axis k}
  std::size_t (*count_box)(const Coords& pts, const double* center, double half, double side);
  /// out[i] = |minimal_image(p_i - origin)|^2
  void (*torus_dist2)(const Coords& pts, const double* origin, double side, double* out);
};

/// The table in use (selected on first call).
const KernelTable& kernels();

/// Table for a specific backend, or nullptr when it is not compiled in or
/// the CPU lacks the instructions.
const KernelTable* table_for(Backend b) noexcept;

/// Pins the active table (tests, benchmarking). Throws DomainError if the
/// backend is unavailable.
void force_backend(Backend b);

Backend active_backend();

namespace scalar {
extern const KernelTable table;
}

}  // namespace rigidlab::simd

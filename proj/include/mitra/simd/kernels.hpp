#pragma once

// Dot-product kernels behind the exact top-k search.
//
// Vectors are stored as 32-bit floats; every kernel accumulates in double so
// that all ISA variants agree with the scalar reference to ~1e-12.

#include <cstddef>
#include <span>
#include <string_view>

namespace mitra::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  double (*dot)(const float* a, const float* b, std::size_t n);
  // out[r] = dot(matrix[r*dim .. r*dim+dim), query) for r in [0, out.size())
  void (*dot_rows)(const float* matrix, std::size_t dim, const float* query,
                   double* out, std::size_t rows);
};

/// True when the ISA was compiled in and the running CPU supports it.
bool isa_available(Isa isa) noexcept;

/// Kernel table for a specific ISA; falls back to scalar if unavailable.
const KernelTable& kernels_for(Isa isa) noexcept;

/// Best available kernels for this CPU. The choice is made once; setting
/// MITRA_SIMD=scalar in the environment pins the scalar reference.
const KernelTable& active_kernels() noexcept;

inline double dot(std::span<const float> a, std::span<const float> b) {
  return active_kernels().dot(a.data(), b.data(), a.size());
}

void dot_rows(std::span<const float> matrix, std::size_t dim,
              std::span<const float> query, std::span<double> out);

namespace detail {
double dot_scalar(const float* a, const float* b, std::size_t n);
void dot_rows_scalar(const float* matrix, std::size_t dim, const float* query,
                     double* out, std::size_t rows);
#if defined(MITRA_HAVE_AVX2)
double dot_avx2(const float* a, const float* b, std::size_t n);
void dot_rows_avx2(const float* matrix, std::size_t dim, const float* query,
                   double* out, std::size_t rows);
#endif
#if defined(MITRA_HAVE_NEON)
double dot_neon(const float* a, const float* b, std::size_t n);
void dot_rows_neon(const float* matrix, std::size_t dim, const float* query,
                   double* out, std::size_t rows);
#endif
}  // namespace detail

}  // namespace mitra::simd

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "mitra/simd/kernels.hpp"

namespace mitra::simd {

namespace {

constexpr KernelTable kScalar{Isa::Scalar, &detail::dot_scalar, &detail::dot_rows_scalar};
#if defined(MITRA_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::Avx2, &detail::dot_avx2, &detail::dot_rows_avx2};
#endif
#if defined(MITRA_HAVE_NEON)
constexpr KernelTable kNeon{Isa::Neon, &detail::dot_neon, &detail::dot_rows_neon};
#endif

const KernelTable& select_kernels() noexcept {
  if (const char* forced = std::getenv("MITRA_SIMD"); forced && std::string(forced) == "scalar") {
    return kScalar;
  }
  if (isa_available(Isa::Avx2)) return kernels_for(Isa::Avx2);
  if (isa_available(Isa::Neon)) return kernels_for(Isa::Neon);
  return kScalar;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(MITRA_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(MITRA_HAVE_NEON)
      return true;  // mandatory on aarch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) noexcept {
  if (!isa_available(isa)) return kScalar;
  switch (isa) {
#if defined(MITRA_HAVE_AVX2)
    case Isa::Avx2: return kAvx2;
#endif
#if defined(MITRA_HAVE_NEON)
    case Isa::Neon: return kNeon;
#endif
    default: return kScalar;
  }
}

const KernelTable& active_kernels() noexcept {
  static const KernelTable& table = select_kernels();
  return table;
}

void dot_rows(std::span<const float> matrix, std::size_t dim,
              std::span<const float> query, std::span<double> out) {
  if (query.size() != dim || matrix.size() != dim * out.size()) {
    throw std::invalid_argument("dot_rows: shape mismatch");
  }
  if (out.empty()) return;
  active_kernels().dot_rows(matrix.data(), dim, query.data(), out.data(), out.size());
}

}  // namespace mitra::simd

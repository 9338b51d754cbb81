#include "mitra/simd/kernels.hpp"

namespace mitra::simd::detail {

double dot_scalar(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

void dot_rows_scalar(const float* matrix, std::size_t dim, const float* query,
                     double* out, std::size_t rows) {
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = dot_scalar(matrix + r * dim, query, dim);
  }
}

}  // namespace mitra::simd::detail

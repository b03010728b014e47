// AVX2 + FMA kernels. Compiled with -mavx2 -mfma; only reached through the
// dispatch table after a CPU feature check.

#include <immintrin.h>

#define MAGT_ISA_NS avx2
#include "gemm_driver.hpp"

namespace magt::kernels::detail::avx2 {
namespace {

// 6 x 8 register tile: 12 accumulators, 2 B vectors, 1 broadcast.
struct Tile6x8 {
  static constexpr std::size_t MR = 6;
  static constexpr std::size_t NR = 8;

  static void run(std::size_t kc, const double* ap, const double* bp, double alpha, double beta,
                  double* c, std::size_t ldc) {
    __m256d acc[MR][2];
    for (std::size_t i = 0; i < MR; ++i) acc[i][0] = acc[i][1] = _mm256_setzero_pd();
    for (std::size_t p = 0; p < kc; ++p) {
      const __m256d b0 = _mm256_loadu_pd(bp);
      const __m256d b1 = _mm256_loadu_pd(bp + 4);
      for (std::size_t i = 0; i < MR; ++i) {
        const __m256d av = _mm256_broadcast_sd(ap + i);
        acc[i][0] = _mm256_fmadd_pd(av, b0, acc[i][0]);
        acc[i][1] = _mm256_fmadd_pd(av, b1, acc[i][1]);
      }
      ap += MR;
      bp += NR;
    }
    const __m256d va = _mm256_set1_pd(alpha);
    if (beta == 0.0) {
      for (std::size_t i = 0; i < MR; ++i) {
        _mm256_storeu_pd(c + i * ldc, _mm256_mul_pd(va, acc[i][0]));
        _mm256_storeu_pd(c + i * ldc + 4, _mm256_mul_pd(va, acc[i][1]));
      }
    } else {
      const __m256d vb = _mm256_set1_pd(beta);
      for (std::size_t i = 0; i < MR; ++i) {
        double* row = c + i * ldc;
        _mm256_storeu_pd(row, _mm256_fmadd_pd(va, acc[i][0], _mm256_mul_pd(vb, _mm256_loadu_pd(row))));
        _mm256_storeu_pd(row + 4,
                         _mm256_fmadd_pd(va, acc[i][1], _mm256_mul_pd(vb, _mm256_loadu_pd(row + 4))));
      }
    }
  }
};

void gemm_avx2(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
               const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
               double* c, std::size_t ldc) {
  gemm_blocked<Tile6x8>(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void sq_dist_avx2(const double* y, const double* centers, std::size_t count, std::size_t dim,
                  std::size_t stride, double scale, double* out) {
  const __m256d vs = _mm256_set1_pd(scale);
  std::size_t j = 0;
  for (; j + 4 <= count; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t r = 0; r < dim; ++r) {
      const __m256d cv = _mm256_loadu_pd(centers + r * stride + j);
      const __m256d diff = _mm256_fnmadd_pd(vs, cv, _mm256_set1_pd(y[r]));
      acc = _mm256_fmadd_pd(diff, diff, acc);
    }
    _mm256_storeu_pd(out + j, acc);
  }
  for (; j < count; ++j) {
    double acc = 0.0;
    for (std::size_t r = 0; r < dim; ++r) {
      const double diff = y[r] - scale * centers[r * stride + j];
      acc += diff * diff;
    }
    out[j] = acc;
  }
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace
}  // namespace magt::kernels::detail::avx2

namespace magt::kernels::detail {
const KernelTable kAvx2Table{Isa::Avx2, &avx2::gemm_avx2, &avx2::sq_dist_avx2, &avx2::dot_avx2};
}

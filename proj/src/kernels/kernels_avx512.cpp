// AVX-512F kernels. Compiled with -mavx512f -mfma; only reached through the
// dispatch table after a CPU feature check.

#include <immintrin.h>

#define MAGT_ISA_NS avx512
#include "gemm_driver.hpp"

namespace magt::kernels::detail::avx512 {
namespace {

// 8 x 24 register tile: 24 accumulators, 3 B vectors, 1 broadcast.
struct Tile8x24 {
  static constexpr std::size_t MR = 8;
  static constexpr std::size_t NR = 24;

  static void run(std::size_t kc, const double* ap, const double* bp, double alpha, double beta,
                  double* c, std::size_t ldc) {
    __m512d acc[MR][3];
    for (std::size_t i = 0; i < MR; ++i) acc[i][0] = acc[i][1] = acc[i][2] = _mm512_setzero_pd();
    for (std::size_t p = 0; p < kc; ++p) {
      const __m512d b0 = _mm512_loadu_pd(bp);
      const __m512d b1 = _mm512_loadu_pd(bp + 8);
      const __m512d b2 = _mm512_loadu_pd(bp + 16);
      for (std::size_t i = 0; i < MR; ++i) {
        const __m512d av = _mm512_set1_pd(ap[i]);
        acc[i][0] = _mm512_fmadd_pd(av, b0, acc[i][0]);
        acc[i][1] = _mm512_fmadd_pd(av, b1, acc[i][1]);
        acc[i][2] = _mm512_fmadd_pd(av, b2, acc[i][2]);
      }
      ap += MR;
      bp += NR;
    }
    const __m512d va = _mm512_set1_pd(alpha);
    if (beta == 0.0) {
      for (std::size_t i = 0; i < MR; ++i)
        for (std::size_t v = 0; v < 3; ++v)
          _mm512_storeu_pd(c + i * ldc + 8 * v, _mm512_mul_pd(va, acc[i][v]));
    } else {
      const __m512d vb = _mm512_set1_pd(beta);
      for (std::size_t i = 0; i < MR; ++i)
        for (std::size_t v = 0; v < 3; ++v) {
          double* dst = c + i * ldc + 8 * v;
          _mm512_storeu_pd(dst, _mm512_fmadd_pd(va, acc[i][v], _mm512_mul_pd(vb, _mm512_loadu_pd(dst))));
        }
    }
  }
};

void gemm_avx512(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
                 double* c, std::size_t ldc) {
  gemm_blocked<Tile8x24>(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void sq_dist_avx512(const double* y, const double* centers, std::size_t count, std::size_t dim,
                    std::size_t stride, double scale, double* out) {
  const __m512d vs = _mm512_set1_pd(scale);
  std::size_t j = 0;
  for (; j + 8 <= count; j += 8) {
    __m512d acc = _mm512_setzero_pd();
    for (std::size_t r = 0; r < dim; ++r) {
      const __m512d cv = _mm512_loadu_pd(centers + r * stride + j);
      const __m512d diff = _mm512_fnmadd_pd(vs, cv, _mm512_set1_pd(y[r]));
      acc = _mm512_fmadd_pd(diff, diff, acc);
    }
    _mm512_storeu_pd(out + j, acc);
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

double dot_avx512(const double* x, const double* y, std::size_t n) {
  __m512d acc0 = _mm512_setzero_pd();
  __m512d acc1 = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), acc0);
    acc1 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i + 8), _mm512_loadu_pd(y + i + 8), acc1);
  }
  double acc = _mm512_reduce_add_pd(_mm512_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace
}  // namespace magt::kernels::detail::avx512

namespace magt::kernels::detail {
const KernelTable kAvx512Table{Isa::Avx512, &avx512::gemm_avx512, &avx512::sq_dist_avx512,
                               &avx512::dot_avx512};
}

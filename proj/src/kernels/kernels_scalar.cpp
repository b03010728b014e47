// Scalar reference kernels. Straight loops, no blocking: these define the
// semantics the SIMD variants are checked against.

#include "magt/kernels.hpp"

namespace magt::kernels::detail {
namespace {

void gemm_scalar(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
                 double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ta == Trans::No ? a[i * lda + p] : a[p * lda + i];
        const double bv = tb == Trans::No ? b[p * ldb + j] : b[j * ldb + p];
        acc += av * bv;
      }
      double& out = c[i * ldc + j];
      out = beta == 0.0 ? alpha * acc : alpha * acc + beta * out;
    }
  }
}

void sq_dist_scalar(const double* y, const double* centers, std::size_t count, std::size_t dim,
                    std::size_t stride, double scale, double* out) {
  for (std::size_t j = 0; j < count; ++j) {
    double acc = 0.0;
    for (std::size_t r = 0; r < dim; ++r) {
      const double diff = y[r] - scale * centers[r * stride + j];
      acc += diff * diff;
    }
    out[j] = acc;
  }
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace

const KernelTable kScalarTable{Isa::Scalar, &gemm_scalar, &sq_dist_scalar, &dot_scalar};

}  // namespace magt::kernels::detail

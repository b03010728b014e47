#pragma once
// Dense arithmetic kernels with a portable scalar reference and SIMD variants
// selected at runtime from the CPU's feature flags.
//
// All matrices are row-major double precision. The scalar table is the
// reference every SIMD table is tested against.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace magt::kernels {

enum class Trans { No, Yes };

enum class Isa { Scalar, Avx2, Avx512 };

std::string_view isa_name(Isa isa);

/// C = alpha * op(A) * op(B) + beta * C, with op(A) m x k and op(B) k x n.
/// When beta == 0, C is overwritten without being read.
using GemmFn = void (*)(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
                        double alpha, const double* a, std::size_t lda, const double* b,
                        std::size_t ldb, double beta, double* c, std::size_t ldc);

/// out[j] = sum_r (y[r] - scale * centers[r * stride + j])^2 for j < count.
/// Centers are stored coordinate-major (one contiguous row per ambient axis).
using SqDistFn = void (*)(const double* y, const double* centers, std::size_t count,
                          std::size_t dim, std::size_t stride, double scale, double* out);

/// sum_i x[i] * y[i]
using DotFn = double (*)(const double* x, const double* y, std::size_t n);

struct KernelTable {
  Isa isa;
  GemmFn gemm;
  SqDistFn sq_dist;
  DotFn dot;
};

/// Table for a specific instruction set. Throws std::runtime_error when the
/// running CPU (or the build) does not support it.
const KernelTable& table_for(Isa isa);

/// Instruction sets usable on this machine, scalar first.
std::vector<Isa> available_isas();

/// The table used by the library. Picks the widest supported ISA unless the
/// MAGT_KERNELS environment variable names one of scalar, avx2, avx512.
const KernelTable& active();

/// Overrides the active table (tests and benchmarks).
void set_active(Isa isa);

namespace detail {
// Per-ISA entry points; defined in their own translation units compiled with
// the matching target flags.
extern const KernelTable kScalarTable;
#if defined(MAGT_HAVE_AVX2_KERNELS)
extern const KernelTable kAvx2Table;
#endif
#if defined(MAGT_HAVE_AVX512_KERNELS)
extern const KernelTable kAvx512Table;
#endif

/// Packing workspace for the blocked GEMM drivers, owned by generic code so
/// no standard-library templates are instantiated under wider target flags.
double* gemm_workspace(std::size_t doubles);
}  // namespace detail

}  // namespace magt::kernels

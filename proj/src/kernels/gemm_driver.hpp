#pragma once
// Blocked GEMM driver shared by the SIMD translation units. Included only
// from files compiled with ISA-specific flags; every symbol here lives in an
// ISA-local namespace chosen by the includer (MAGT_ISA_NS) so no instantiation
// leaks across targets.
//
// Loop nest (outer to inner): N blocks of NC, K blocks of KC (pack B), M
// blocks of MC (pack A), then MR x NR register tiles.

#include <cstddef>

#include "magt/kernels.hpp"

namespace magt::kernels::detail::MAGT_ISA_NS {

inline std::size_t min_sz(std::size_t a, std::size_t b) { return a < b ? a : b; }

// Packs op(A)[i0:i0+mc, p0:p0+kc] into MR-row slivers, zero-padding the tail.
template <std::size_t MR>
void pack_a(Trans ta, const double* a, std::size_t lda, std::size_t i0, std::size_t p0,
            std::size_t mc, std::size_t kc, double* dst) {
  for (std::size_t is = 0; is < mc; is += MR) {
    const std::size_t rows = min_sz(MR, mc - is);
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t i = 0; i < MR; ++i) {
        double v = 0.0;
        if (i < rows) {
          const std::size_t gi = i0 + is + i;
          const std::size_t gp = p0 + p;
          v = ta == Trans::No ? a[gi * lda + gp] : a[gp * lda + gi];
        }
        *dst++ = v;
      }
    }
  }
}

// Packs op(B)[p0:p0+kc, j0:j0+nc] into NR-column slivers, zero-padding the tail.
template <std::size_t NR>
void pack_b(Trans tb, const double* b, std::size_t ldb, std::size_t p0, std::size_t j0,
            std::size_t kc, std::size_t nc, double* dst) {
  for (std::size_t js = 0; js < nc; js += NR) {
    const std::size_t cols = min_sz(NR, nc - js);
    if (tb == Trans::No && cols == NR) {
      for (std::size_t p = 0; p < kc; ++p) {
        const double* src = b + (p0 + p) * ldb + j0 + js;
        for (std::size_t j = 0; j < NR; ++j) dst[j] = src[j];
        dst += NR;
      }
      continue;
    }
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t j = 0; j < NR; ++j) {
        double v = 0.0;
        if (j < cols) {
          const std::size_t gj = j0 + js + j;
          const std::size_t gp = p0 + p;
          v = tb == Trans::No ? b[gp * ldb + gj] : b[gj * ldb + gp];
        }
        *dst++ = v;
      }
    }
  }
}

// Kernel must provide:
//   static constexpr std::size_t MR, NR;
//   static void run(std::size_t kc, const double* ap, const double* bp, double alpha,
//                   double beta, double* c, std::size_t ldc);   // full tile
// Partial tiles go through a local MR x NR buffer.
template <class Kernel>
void gemm_blocked(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
                  const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
                  double* c, std::size_t ldc) {
  constexpr std::size_t MR = Kernel::MR;
  constexpr std::size_t NR = Kernel::NR;
  constexpr std::size_t KC = 256;
  constexpr std::size_t MC = MR * (120 / MR);
  constexpr std::size_t NC = NR * (4080 / NR);

  if (m == 0 || n == 0) return;
  if (k == 0 || alpha == 0.0) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] = beta == 0.0 ? 0.0 : beta * c[i * ldc + j];
    return;
  }

  double* a_pack = gemm_workspace(MC * KC + NC * KC);
  double* b_pack = a_pack + MC * KC;
  alignas(64) double tile[MR * NR];

  for (std::size_t j0 = 0; j0 < n; j0 += NC) {
    const std::size_t nc = min_sz(NC, n - j0);
    for (std::size_t p0 = 0; p0 < k; p0 += KC) {
      const std::size_t kc = min_sz(KC, k - p0);
      const double beta_eff = p0 == 0 ? beta : 1.0;
      pack_b<NR>(tb, b, ldb, p0, j0, kc, nc, b_pack);
      for (std::size_t i0 = 0; i0 < m; i0 += MC) {
        const std::size_t mc = min_sz(MC, m - i0);
        pack_a<MR>(ta, a, lda, i0, p0, mc, kc, a_pack);
        for (std::size_t js = 0; js < nc; js += NR) {
          const std::size_t cols = min_sz(NR, nc - js);
          const double* bp = b_pack + js * kc;
          for (std::size_t is = 0; is < mc; is += MR) {
            const std::size_t rows = min_sz(MR, mc - is);
            const double* ap = a_pack + is * kc;
            double* cp = c + (i0 + is) * ldc + j0 + js;
            if (rows == MR && cols == NR) {
              Kernel::run(kc, ap, bp, alpha, beta_eff, cp, ldc);
            } else {
              for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < cols; ++j) tile[i * NR + j] = cp[i * ldc + j];
              Kernel::run(kc, ap, bp, alpha, beta_eff, tile, NR);
              for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < cols; ++j) cp[i * ldc + j] = tile[i * NR + j];
            }
          }
        }
      }
    }
  }
}

}  // namespace magt::kernels::detail::MAGT_ISA_NS

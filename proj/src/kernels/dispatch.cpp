#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "magt/kernels.hpp"

namespace magt::kernels {
namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(MAGT_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Avx512:
#if defined(MAGT_HAVE_AVX512_KERNELS) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx512f") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& raw_table(Isa isa) {
  switch (isa) {
#if defined(MAGT_HAVE_AVX512_KERNELS)
    case Isa::Avx512:
      return detail::kAvx512Table;
#endif
#if defined(MAGT_HAVE_AVX2_KERNELS)
    case Isa::Avx2:
      return detail::kAvx2Table;
#endif
    default:
      return detail::kScalarTable;
  }
}

Isa pick_default() {
  if (const char* env = std::getenv("MAGT_KERNELS")) {
    const std::string want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Avx512})
      if (want == isa_name(isa) && cpu_supports(isa)) return isa;
  }
  const auto isas = available_isas();
  return isas.back();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&raw_table(pick_default())};
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Avx512:
      return "avx512";
  }
  return "unknown";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Avx512})
    if (cpu_supports(isa)) out.push_back(isa);
  return out;
}

const KernelTable& table_for(Isa isa) {
  if (!cpu_supports(isa))
    throw std::runtime_error("kernel ISA not supported here: " + std::string(isa_name(isa)));
  return raw_table(isa);
}

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

void set_active(Isa isa) { active_slot().store(&table_for(isa), std::memory_order_release); }

namespace detail {
double* gemm_workspace(std::size_t doubles) {
  thread_local std::vector<double> buffer;
  if (buffer.size() < doubles) buffer.resize(doubles);
  return buffer.data();
}
}  // namespace detail

}  // namespace magt::kernels

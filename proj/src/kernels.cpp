#include "tva/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace tva::simd {
namespace {

bool cpuHasAvx2() noexcept {
#if defined(TVA_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* pickDefault() noexcept {
  if (const char* env = std::getenv("TVA_SIMD")) {
    const std::string want{env};
    if (want == "scalar") return &detail::kScalarTable;
#if defined(TVA_BUILD_AVX2)
    if (want == "avx2" && cpuHasAvx2()) return &detail::kAvx2Table;
#endif
#if defined(TVA_BUILD_NEON)
    if (want == "neon") return &detail::kNeonTable;
#endif
  }
#if defined(TVA_BUILD_AVX2)
  if (cpuHasAvx2()) return &detail::kAvx2Table;
#endif
#if defined(TVA_BUILD_NEON)
  return &detail::kNeonTable;
#else
  return &detail::kScalarTable;
#endif
}

std::atomic<const KernelTable*>& activeSlot() noexcept {
  static std::atomic<const KernelTable*> slot{pickDefault()};
  return slot;
}

}  // namespace

std::string_view isaName(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isSupported(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2: return cpuHasAvx2();
    case Isa::Neon:
#if defined(TVA_BUILD_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::vector<Isa> availableIsas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
    if (isSupported(isa)) out.push_back(isa);
  }
  return out;
}

const KernelTable& kernels(Isa isa) {
  if (!isSupported(isa)) {
    throw std::invalid_argument("SIMD kernels not available: " + std::string(isaName(isa)));
  }
  switch (isa) {
#if defined(TVA_BUILD_AVX2)
    case Isa::Avx2: return detail::kAvx2Table;
#endif
#if defined(TVA_BUILD_NEON)
    case Isa::Neon: return detail::kNeonTable;
#endif
    default: return detail::kScalarTable;
  }
}

const KernelTable& active() noexcept { return *activeSlot().load(std::memory_order_relaxed); }

void setActive(Isa isa) { activeSlot().store(&kernels(isa), std::memory_order_relaxed); }

}  // namespace tva::simd

#pragma once

// Reduction kernels behind the numeric hot loops (metrics, autocorrelation,
// Gram matrices). A scalar reference implementation is always present;
// vectorized variants are selected at runtime when the CPU supports them.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace tva::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isaName(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  double (*sum)(const double* a, std::size_t n) noexcept;
  double (*dot)(const double* a, const double* b, std::size_t n) noexcept;
  // sum of (a[i] - b[i])^2
  double (*sumSquaredDiff)(const double* a, const double* b, std::size_t n) noexcept;
  // sum of |a[i] - b[i]|
  double (*sumAbsDiff)(const double* a, const double* b, std::size_t n) noexcept;
  // out[i] = a[i] - c
  void (*subtractScalar)(const double* a, double c, double* out, std::size_t n) noexcept;
};

/// Kernels compiled into this binary and usable on the running CPU.
std::vector<Isa> availableIsas();
bool isSupported(Isa isa) noexcept;

/// Table for a specific ISA; throws std::invalid_argument when unsupported.
const KernelTable& kernels(Isa isa);

/// The table used by the library. Picked once from the best supported ISA,
/// unless TVA_SIMD=scalar|avx2|neon is set in the environment.
const KernelTable& active() noexcept;

/// Overrides the active table (tests and benchmarking).
void setActive(Isa isa);

inline double sum(std::span<const double> a) noexcept {
  return active().sum(a.data(), a.size());
}

// Callers guarantee equal lengths; the span overloads use a.size().
inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return active().dot(a.data(), b.data(), a.size());
}

inline double sumSquaredDiff(std::span<const double> a, std::span<const double> b) noexcept {
  return active().sumSquaredDiff(a.data(), b.data(), a.size());
}

inline double sumAbsDiff(std::span<const double> a, std::span<const double> b) noexcept {
  return active().sumAbsDiff(a.data(), b.data(), a.size());
}

inline std::vector<double> centered(std::span<const double> a, double c) {
  std::vector<double> out(a.size());
  active().subtractScalar(a.data(), c, out.data(), a.size());
  return out;
}

namespace detail {
extern const KernelTable kScalarTable;
#if defined(TVA_BUILD_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(TVA_BUILD_NEON)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace tva::simd

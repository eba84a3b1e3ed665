#include "tva/kernels.hpp"

#include <cmath>

namespace tva::simd {
namespace {

double sumScalar(const double* a, std::size_t n) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}

double dotScalar(const double* a, const double* b, std::size_t n) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sumSquaredDiffScalar(const double* a, const double* b, std::size_t n) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sumAbsDiffScalar(const double* a, const double* b, std::size_t n) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

void subtractScalarScalar(const double* a, double c, double* out, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - c;
}

}  // namespace

namespace detail {
const KernelTable kScalarTable{Isa::Scalar,          sumScalar,        dotScalar,
                               sumSquaredDiffScalar, sumAbsDiffScalar, subtractScalarScalar};
}

}  // namespace tva::simd

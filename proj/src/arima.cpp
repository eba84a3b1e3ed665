#include "tva/arima.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tva/error.hpp"
#include "tva/kernels.hpp"

namespace tva::arima {
namespace {

constexpr std::size_t kMinDifferencedLength = 10;

std::vector<double> diffOnce(std::span<const double> v) {
  std::vector<double> out;
  out.reserve(v.size() > 0 ? v.size() - 1 : 0);
  for (std::size_t i = 1; i < v.size(); ++i) out.push_back(v[i] - v[i - 1]);
  return out;
}

// In-sample residuals of the fitted recursion on the differenced series.
std::vector<double> residualsOf(const Model& m, std::span<const double> z) {
  std::vector<double> r;
  if (m.order.p == 0) {
    r.reserve(z.size());
    for (double v : z) r.push_back(v - m.constant);
  } else {
    r.reserve(z.size() - 1);
    for (std::size_t t = 1; t < z.size(); ++t) r.push_back(z[t] - m.constant - m.phi * z[t - 1]);
  }
  return r;
}

// Residuals at rounding level relative to `scale` count as a perfect fit.
double lag1Autocorrelation(std::span<const double> v, double scale) {
  if (v.size() < 2) return 0.0;
  const double mean = simd::sum(v) / static_cast<double>(v.size());
  const auto c = simd::centered(v, mean);
  const double c0 = simd::dot(c, c);
  if (c0 <= 1e-24 * static_cast<double>(v.size()) * std::max(1.0, scale * scale)) return 0.0;
  return simd::dot(std::span<const double>(c).subspan(1), std::span<const double>(c).first(c.size() - 1)) / c0;
}

}  // namespace

void Order::validate() const {
  if (q != 0 || p < 0 || p > 1 || d < 0 || d > 2) {
    throw ValidationError(fmt::format("unsupported ARIMA order ({}, {}, {})", p, d, q));
  }
}

void Model::validate() const {
  order.validate();
  if (!(std::fabs(phi) < 1.0)) throw ValidationError("ARIMA model: |phi| must be < 1");
  if (!std::isfinite(constant)) throw ValidationError("ARIMA model: constant must be finite");
  if (!(residualVariance >= 0.0)) throw ValidationError("ARIMA model: residual variance must be >= 0");
  if (lastObservations.size() != static_cast<std::size_t>(order.d + order.p)) {
    throw ValidationError(fmt::format("ARIMA model: expected {} trailing observations, got {}",
                                      order.d + order.p, lastObservations.size()));
  }
}

TimeSeries difference(const TimeSeries& s, int degree) {
  if (degree < 0 || degree > 2) {
    throw ValidationError(fmt::format("differencing degree must be 0, 1 or 2, got {}", degree));
  }
  if (s.size() <= static_cast<std::size_t>(degree)) {
    throw ValidationError(fmt::format("series of length {} too short for differencing degree {}",
                                      s.size(), degree));
  }
  std::vector<double> v(s.values().begin(), s.values().end());
  for (int k = 0; k < degree; ++k) v = diffOnce(v);
  return TimeSeries(std::move(v), s.interval());
}

TimeSeries integrate(const TimeSeries& diffs, double initial) {
  std::vector<double> out;
  out.reserve(diffs.size() + 1);
  double level = initial;
  out.push_back(level);
  for (double d : diffs.values()) {
    level += d;
    out.push_back(level);
  }
  return TimeSeries(std::move(out), diffs.interval());
}

std::vector<double> acf(const TimeSeries& s, int maxLag) {
  if (maxLag < 1) throw ValidationError("acf: maxLag must be >= 1");
  if (s.size() < static_cast<std::size_t>(maxLag) + 2) {
    throw ValidationError(fmt::format("acf: need at least {} observations, got {}", maxLag + 2, s.size()));
  }
  const auto v = s.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*lo == *hi) throw ValidationError("acf: series has zero variance");

  const double mean = simd::sum(v) / static_cast<double>(v.size());
  const auto c = simd::centered(v, mean);
  const std::span<const double> cs(c);
  const double c0 = simd::dot(cs, cs);
  if (!(c0 > 0.0)) throw ValidationError("acf: series has zero variance");

  std::vector<double> r;
  r.reserve(static_cast<std::size_t>(maxLag));
  for (int k = 1; k <= maxLag; ++k) {
    const auto n = c.size() - static_cast<std::size_t>(k);
    r.push_back(std::clamp(simd::dot(cs.first(n), cs.subspan(static_cast<std::size_t>(k))) / c0, -1.0, 1.0));
  }
  return r;
}

std::vector<double> durbinLevinson(const std::vector<double>& rho) {
  const std::size_t K = rho.size();
  std::vector<double> out;
  out.reserve(K);
  std::vector<double> prev;  // phi_{k-1, 1..k-1}
  for (std::size_t k = 1; k <= K; ++k) {
    double num = rho[k - 1];
    double den = 1.0;
    for (std::size_t j = 1; j < k; ++j) {
      num -= prev[j - 1] * rho[k - j - 1];
      den -= prev[j - 1] * rho[j - 1];
    }
    const double phiKK = den != 0.0 ? num / den : 0.0;
    std::vector<double> cur(k);
    for (std::size_t j = 1; j < k; ++j) cur[j - 1] = prev[j - 1] - phiKK * prev[k - j - 1];
    cur[k - 1] = phiKK;
    out.push_back(phiKK);
    prev = std::move(cur);
  }
  return out;
}

std::vector<double> pacf(const TimeSeries& s, int maxLag) { return durbinLevinson(acf(s, maxLag)); }

Model fit(const TimeSeries& s, Order order) {
  order.validate();
  if (s.size() < static_cast<std::size_t>(order.d) + kMinDifferencedLength) {
    throw ValidationError(fmt::format(
        "series of length {} too short for ARIMA({},{},0): need at least {} differenced points",
        s.size(), order.p, order.d, kMinDifferencedLength));
  }
  const TimeSeries diffed = difference(s, order.d);
  const auto z = diffed.values();

  Model m;
  m.order = order;
  m.fittedLength = s.size();

  if (order.p == 0) {
    m.constant = simd::sum(z) / static_cast<double>(z.size());
  } else {
    // Regress z_t on z_{t-1}.
    const auto x = z.first(z.size() - 1);
    const auto y = z.subspan(1);
    const double n = static_cast<double>(x.size());
    const double xMean = simd::sum(x) / n;
    const double yMean = simd::sum(y) / n;
    const auto xc = simd::centered(x, xMean);
    const auto yc = simd::centered(y, yMean);
    const double sxx = simd::dot(xc, xc);
    const double sxy = simd::dot(xc, yc);
    // A constant lagged regressor carries no AR information; fall back to the
    // drift-only fit.
    const double scale = std::max(1.0, xMean * xMean);
    if (sxx <= 1e-24 * n * scale) {
      m.phi = 0.0;
      m.constant = yMean;
    } else {
      m.phi = sxy / sxx;
      m.constant = yMean - m.phi * xMean;
    }
    if (!(std::fabs(m.phi) < 1.0)) {
      throw ValidationError(fmt::format("ARIMA fit is non-stationary: phi = {}", m.phi));
    }
  }

  const auto resid = residualsOf(m, z);
  const std::vector<double> zeros(resid.size(), 0.0);
  m.residualVariance = simd::sumSquaredDiff(resid, zeros) / static_cast<double>(resid.size());

  const auto keep = static_cast<std::size_t>(order.d + order.p);
  const auto raw = s.values();
  m.lastObservations.assign(raw.end() - static_cast<std::ptrdiff_t>(keep), raw.end());
  return m;
}

std::vector<double> forecast(const Model& m, int horizon) {
  if (horizon < 1) throw ValidationError(fmt::format("forecast horizon must be >= 1, got {}", horizon));
  m.validate();
  const int d = m.order.d;

  // Difference stack of the tail: level k holds the k-th differences.
  std::vector<std::vector<double>> stack{m.lastObservations};
  for (int k = 0; k < d; ++k) stack.push_back(diffOnce(stack.back()));
  // Last value at each integration level 0..d-1.
  std::vector<double> last(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) last[static_cast<std::size_t>(k)] = stack[static_cast<std::size_t>(k)].back();
  double z = m.order.p == 1 ? stack[static_cast<std::size_t>(d)].back() : 0.0;

  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (int h = 0; h < horizon; ++h) {
    z = m.constant + m.phi * z;
    double cur = z;
    for (int k = d - 1; k >= 0; --k) {
      last[static_cast<std::size_t>(k)] += cur;
      cur = last[static_cast<std::size_t>(k)];
    }
    out.push_back(cur);
  }
  return out;
}

Model reanchor(const Model& m, const TimeSeries& s) {
  const auto keep = static_cast<std::size_t>(m.order.d + m.order.p);
  if (s.size() < keep) {
    throw ValidationError(fmt::format("reanchor needs at least {} observations, got {}", keep, s.size()));
  }
  Model out = m;
  const auto raw = s.values();
  out.lastObservations.assign(raw.end() - static_cast<std::ptrdiff_t>(keep), raw.end());
  return out;
}

ResidualReport checkResiduals(const Model& m, const TimeSeries& s) {
  m.validate();
  if (s.size() != m.fittedLength) {
    throw ValidationError(fmt::format("residual check: model was fit on {} observations, series has {}",
                                      m.fittedLength, s.size()));
  }
  const TimeSeries diffed = difference(s, m.order.d);
  const auto resid = residualsOf(m, diffed.values());
  ResidualReport rep;
  rep.count = resid.size();
  rep.mean = simd::sum(resid) / static_cast<double>(resid.size());
  double scale = 0.0;
  for (double z : diffed.values()) scale = std::max(scale, std::fabs(z));
  rep.lag1Autocorrelation = lag1Autocorrelation(resid, scale);
  rep.suspect = std::fabs(rep.lag1Autocorrelation) > 2.0 / std::sqrt(static_cast<double>(rep.count));
  return rep;
}

}  // namespace tva::arima

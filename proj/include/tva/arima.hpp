#pragma once

// Differenced autoregressive forecasting, ARIMA(p, d, 0) with p <= 1 and
// d <= 2. The model used by the decision loop is ARIMA(1, 1, 0).

#include <cstddef>
#include <vector>

#include "tva/core.hpp"

namespace tva::arima {

struct Order {
  int p = 1;
  int d = 1;
  int q = 0;

  /// Throws ValidationError unless p in {0,1}, d in {0,1,2}, q == 0.
  void validate() const;
  bool operator==(const Order&) const = default;
};

inline constexpr Order kDefaultOrder{1, 1, 0};

/// Fitted parameters plus the trailing raw observations needed to undo
/// differencing when forecasting.
struct Model {
  Order order;
  double phi = 0.0;  // AR(1) coefficient on the differenced scale
  double constant = 0.0;
  // Last d + p raw observations, oldest first.
  std::vector<double> lastObservations;
  double residualVariance = 0.0;
  std::size_t fittedLength = 0;

  void validate() const;
};

/// k-th order differencing, k in {0,1,2}; requires size() > degree.
TimeSeries difference(const TimeSeries& s, int degree);

/// Inverse of first-order differencing: cumulative sum seeded with `initial`.
/// Output has one more element than `diffs`.
TimeSeries integrate(const TimeSeries& diffs, double initial);

/// Sample autocorrelations r_1..r_maxLag (biased estimator, mean-centered).
std::vector<double> acf(const TimeSeries& s, int maxLag);

/// Partial autocorrelations via the Durbin-Levinson recursion on acf().
std::vector<double> pacf(const TimeSeries& s, int maxLag);

/// Durbin-Levinson on a given autocorrelation sequence r_1..r_K.
std::vector<double> durbinLevinson(const std::vector<double>& rho);

/// Conditional least squares on the differenced series:
/// z_t = c + phi * z_{t-1} + e_t (p = 1) or z_t = c + e_t (p = 0).
Model fit(const TimeSeries& s, Order order = kDefaultOrder);

/// Point forecasts on the original scale for steps 1..horizon.
std::vector<double> forecast(const Model& m, int horizon);

/// Same parameters re-anchored on the tail of `s`, for fit-once monitoring.
Model reanchor(const Model& m, const TimeSeries& s);

struct ResidualReport {
  double mean = 0.0;
  double lag1Autocorrelation = 0.0;
  std::size_t count = 0;
  bool suspect = false;  // |lag-1 autocorrelation| > 2/sqrt(count)
};

/// In-sample residual diagnostics; `s` must be the series the model was fit on.
ResidualReport checkResiduals(const Model& m, const TimeSeries& s);

}  // namespace tva::arima

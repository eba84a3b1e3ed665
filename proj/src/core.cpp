#include "tva/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

#include "tva/error.hpp"

namespace tva {

TimeSeries::TimeSeries(std::vector<double> values, double intervalSeconds)
    : values_(std::move(values)), interval_(intervalSeconds) {
  if (!(interval_ > 0.0) || !std::isfinite(interval_)) {
    throw ValidationError(fmt::format("time series interval must be positive, got {}", interval_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ValidationError(fmt::format("time series value {} is not finite", i));
    }
  }
}

TimeSeries TimeSeries::head(std::size_t n) const { return slice(0, std::min(n, size())); }

TimeSeries TimeSeries::slice(std::size_t first, std::size_t count) const {
  if (first > size() || count > size() - first) {
    throw ValidationError(
        fmt::format("slice [{}, {}) out of range for series of {}", first, first + count, size()));
  }
  return TimeSeries(std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(first),
                                        values_.begin() + static_cast<std::ptrdiff_t>(first + count)),
                    interval_);
}

void SlaSpec::validate() const {
  if (name.empty()) throw ValidationError("SLA spec name must not be empty");
  if (!std::isfinite(threshold)) {
    throw ValidationError(fmt::format("SLA spec '{}': threshold must be finite", name));
  }
  if (!(penalty >= 0.0) || !std::isfinite(penalty)) {
    throw ValidationError(fmt::format("SLA spec '{}': penalty must be >= 0", name));
  }
  if (!(reward >= 0.0) || !std::isfinite(reward)) {
    throw ValidationError(fmt::format("SLA spec '{}': reward must be >= 0", name));
  }
}

bool SlaSpec::violatedBy(double value) const noexcept {
  return direction == Direction::UpperBound ? value > threshold : value < threshold;
}

void validateSpecs(std::span<const SlaSpec> specs) {
  std::unordered_set<std::string> seen;
  for (const auto& s : specs) {
    s.validate();
    if (!seen.insert(s.name).second) {
      throw ValidationError(fmt::format("duplicate SLA spec name '{}'", s.name));
    }
  }
}

std::vector<SlaSpec> orderSpecsByReward(std::span<const SlaSpec> specs) {
  std::vector<SlaSpec> out(specs.begin(), specs.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const SlaSpec& a, const SlaSpec& b) { return a.reward > b.reward; });
  return out;
}

void Tactic::validate() const {
  if (name.empty()) throw ValidationError("tactic name must not be empty");
  if (!(staticLatency >= 0.0) || !(staticCost >= 0.0)) {
    throw ValidationError(fmt::format("tactic '{}': static latency and cost must be >= 0", name));
  }
  if (featureNames.empty()) {
    throw ValidationError(fmt::format("tactic '{}': feature names must not be empty", name));
  }
  std::unordered_set<std::string> seen;
  for (const auto& f : featureNames) {
    if (!seen.insert(f).second) {
      throw ValidationError(fmt::format("tactic '{}': duplicate feature '{}'", name, f));
    }
  }
}

void UtilityParams::validate() const {
  if (!(cost > 0.0)) throw ValidationError("utility: cost C must be > 0");
  if (!(dimmer >= 0.0 && dimmer <= 1.0)) throw ValidationError("utility: dimmer must lie in [0, 1]");
  if (!(tau > 0.0)) throw ValidationError("utility: interval tau must be > 0");
  if (!(arrivalRate >= 0.0) || !(maxRate >= 0.0)) {
    throw ValidationError("utility: request rates must be >= 0");
  }
}

double utility(const UtilityParams& p) {
  p.validate();
  if (p.responseTime <= p.targetResponse) {
    return p.tau * p.arrivalRate *
           (p.dimmer * p.rewardOptional + (1.0 - p.dimmer) * p.rewardMandatory) / p.cost;
  }
  return p.tau * std::min(0.0, p.arrivalRate - p.maxRate) * p.rewardOptional / p.cost;
}

}  // namespace tva

#pragma once

// Domain value types shared across the engine: monitored series, SLA
// requirements, tactics, and the cost-aware utility function.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tva {

/// Uniformly sampled observations of a monitored quantity. Values are always
/// finite and the sampling interval is positive.
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(std::vector<double> values, double intervalSeconds = 1.0);

  std::span<const double> values() const noexcept { return values_; }
  double interval() const noexcept { return interval_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double back() const { return values_.back(); }

  /// First `n` observations (or all of them when n >= size()).
  TimeSeries head(std::size_t n) const;
  TimeSeries slice(std::size_t first, std::size_t count) const;

  bool operator==(const TimeSeries&) const = default;

 private:
  std::vector<double> values_;
  double interval_ = 1.0;
};

enum class Direction { UpperBound, LowerBound };

struct SlaSpec {
  std::string name;
  double threshold = 0.0;
  Direction direction = Direction::UpperBound;
  double penalty = 0.0;
  double reward = 0.0;

  /// Throws ValidationError on a non-finite threshold or negative P/RWD.
  void validate() const;

  /// True when `value` is on the wrong side of the threshold.
  bool violatedBy(double value) const noexcept;
};

/// Checks each spec and rejects duplicate names.
void validateSpecs(std::span<const SlaSpec> specs);

/// Stable sort by reward, highest first.
std::vector<SlaSpec> orderSpecsByReward(std::span<const SlaSpec> specs);

struct Tactic {
  std::string name;
  double staticLatency = 0.0;  // seconds
  double staticCost = 0.0;
  // Column names of the design matrix its models were trained on, intercept
  // included.
  std::vector<std::string> featureNames;

  void validate() const;
};

/// Inputs of the cost-aware utility function.
struct UtilityParams {
  double tau = 1.0;           // interval length, s
  double arrivalRate = 0.0;   // a, requests/s
  double responseTime = 0.0;  // r, s
  double targetResponse = 0.0;  // T, s
  double maxRate = 0.0;       // k, requests/s
  double dimmer = 1.0;        // d in [0, 1]
  double rewardOptional = 0.0;   // R_O
  double rewardMandatory = 0.0;  // R_M
  double cost = 1.0;          // C > 0

  void validate() const;
};

/// tau*a*(d*R_O + (1-d)*R_M)/C while r <= T, otherwise tau*min(0, a-k)*R_O/C.
double utility(const UtilityParams& p);

}  // namespace tva

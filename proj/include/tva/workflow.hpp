#pragma once

// The monitoring/decision loop: forecast each SLA specification, and when a
// specification is potentially broken, estimate latency and cost of every
// tactic and rank them.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "tva/arima.hpp"
#include "tva/core.hpp"
#include "tva/regression.hpp"

namespace tva::workflow {

enum class SpecStatus { Healthy, AtRisk, Broken };

std::string_view toString(SpecStatus s) noexcept;

struct SpecAnalysis {
  std::string specName;
  std::vector<double> forecastValues;
  SpecStatus status = SpecStatus::Healthy;
  // First forecast step (1-based) that violates or comes within the risk
  // margin of the threshold. Set only for AtRisk; a Broken spec is already
  // violated, so no step is reported.
  std::optional<int> firstViolationStep;
};

struct TacticEstimate {
  std::string tacticName;
  double predictedLatency = 0.0;
  double predictedCost = 0.0;
  double utilityScore = 0.0;
};

/// Forecast `horizon` steps with ARIMA(1,1,0) and classify. When `cached` is
/// given its parameters are reused (re-anchored on `history`) instead of
/// refitting.
SpecAnalysis analyzeSpecification(const SlaSpec& spec, const TimeSeries& history, int horizon, double riskMargin,
                                  const arima::Model* cached = nullptr);

double makeLatencyEstimate(const Tactic& t, std::span<const double> features, const regression::Model& m);
double makeCostEstimate(const Tactic& t, std::span<const double> features, const regression::Model& m);

/// Tactics that finish before the first predicted violation come first; then
/// higher utility, lower cost, and input order.
std::vector<TacticEstimate> rankTactics(std::span<const TacticEstimate> estimates, const SpecAnalysis& analysis,
                                        double tickSeconds);

struct TacticModels {
  regression::Model latency;
  regression::Model cost;
  std::vector<double> features;  // current feature vector for this tactic
};

struct ModelRegistry {
  std::map<std::string, TacticModels> tactics;
  // Pre-fitted forecasters by spec name; specs without one are fit per tick.
  std::map<std::string, arima::Model> forecasters;
};

struct WorkflowConfig {
  int horizon = 5;
  double riskMargin = 0.10;
  double tickSeconds = 6.0;
  // Utility inputs other than r, T and C, which come from the forecast, the
  // spec threshold and the predicted cost.
  UtilityParams utility{6.0, 10.0, 0.0, 0.0, 20.0, 0.5, 2.0, 1.0, 1.0};
  double costFloor = 1e-6;
};

struct TickResult {
  SpecAnalysis analysis;
  std::vector<TacticEstimate> ranked;  // empty unless AtRisk or Broken
  std::string error;                   // non-empty when this spec failed
};

/// Utility of running a tactic whose effect lands once its predicted latency
/// has elapsed: r is the forecast at the landing step.
double tacticUtility(const SlaSpec& spec, const SpecAnalysis& analysis, double latency, double cost,
                     const WorkflowConfig& config);

/// One pass of the loop over all specs in descending-reward order.
std::vector<TickResult> workflowTick(std::span<const SlaSpec> specs,
                                     const std::map<std::string, TimeSeries>& histories,
                                     std::span<const Tactic> tactics, const ModelRegistry& models,
                                     const WorkflowConfig& config = {});

struct MonitorConfig {
  WorkflowConfig workflow;
  std::size_t warmup = 12;
  // Refit forecasters every K ticks; 0 fits once on the warmup window.
  int refitEvery = 0;
};

struct MonitorTick {
  std::size_t tick = 0;  // index of the latest observation seen
  std::vector<TickResult> results;
};

/// Slides over the histories, running workflowTick on each prefix of length
/// warmup..n.
std::vector<MonitorTick> runMonitor(std::span<const SlaSpec> specs, const std::map<std::string, TimeSeries>& histories,
                                    std::span<const Tactic> tactics, const ModelRegistry& models,
                                    const MonitorConfig& config = {});

nlohmann::json toJson(const TickResult& r);

/// Accepts a single spec object, an array of them, or {"specs": [...]}.
/// Errors name the offending field.
std::vector<SlaSpec> parseSpecs(const nlohmann::json& doc);

}  // namespace tva::workflow

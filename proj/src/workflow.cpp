#include "tva/workflow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "tva/error.hpp"

namespace tva::workflow {
namespace {

bool withinRisk(const SlaSpec& spec, double value, double margin) noexcept {
  if (spec.violatedBy(value)) return true;
  if (margin <= 0.0) return false;
  const double band = margin * std::fabs(spec.threshold);
  return spec.direction == Direction::UpperBound ? value >= spec.threshold - band
                                                 : value <= spec.threshold + band;
}

double estimate(const Tactic& t, std::span<const double> features, const regression::Model& m, const char* what) {
  if (!m.trained()) throw ValidationError(fmt::format("tactic '{}': {} model is not trained", t.name, what));
  if (features.size() != m.weights.size()) {
    throw ValidationError(fmt::format("tactic '{}': {} features have width {}, model expects {}", t.name,
                                      what, features.size(), m.weights.size()));
  }
  if (!t.featureNames.empty() && t.featureNames.size() != features.size()) {
    throw ValidationError(fmt::format("tactic '{}': {} feature names for {} features", t.name,
                                      t.featureNames.size(), features.size()));
  }
  if (!m.columnNames.empty() && !t.featureNames.empty() && m.columnNames != t.featureNames) {
    throw ValidationError(fmt::format("tactic '{}': {} model was trained on different features", t.name, what));
  }
  return regression::predict(m, features).value;
}

template <typename T>
T required(const nlohmann::json& obj, const char* field, std::size_t index) {
  if (!obj.contains(field)) throw ValidationError(fmt::format("spec {}: missing field '{}'", index, field));
  try {
    return obj.at(field).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(fmt::format("spec {}: field '{}' has the wrong type", index, field));
  }
}

SlaSpec parseSpec(const nlohmann::json& obj, std::size_t index) {
  if (!obj.is_object()) throw ValidationError(fmt::format("spec {}: expected a JSON object", index));
  SlaSpec s;
  s.name = required<std::string>(obj, "name", index);
  s.threshold = required<double>(obj, "threshold", index);
  const auto dir = obj.contains("direction") ? required<std::string>(obj, "direction", index) : "upper";
  if (dir == "upper" || dir == "upper_bound") {
    s.direction = Direction::UpperBound;
  } else if (dir == "lower" || dir == "lower_bound") {
    s.direction = Direction::LowerBound;
  } else {
    throw ValidationError(fmt::format("spec {}: field 'direction' must be 'upper' or 'lower', got '{}'", index, dir));
  }
  s.penalty = obj.contains("penalty") ? required<double>(obj, "penalty", index) : 0.0;
  s.reward = obj.contains("reward") ? required<double>(obj, "reward", index) : 0.0;
  if (s.penalty < 0.0) throw ValidationError(fmt::format("spec {}: field 'penalty' must be >= 0", index));
  if (s.reward < 0.0) throw ValidationError(fmt::format("spec {}: field 'reward' must be >= 0", index));
  s.validate();
  return s;
}

}  // namespace

std::string_view toString(SpecStatus s) noexcept {
  switch (s) {
    case SpecStatus::Healthy: return "healthy";
    case SpecStatus::AtRisk: return "at_risk";
    case SpecStatus::Broken: return "broken";
  }
  return "healthy";
}

SpecAnalysis analyzeSpecification(const SlaSpec& spec, const TimeSeries& history, int horizon, double riskMargin,
                                  const arima::Model* cached) {
  spec.validate();
  if (horizon < 1) throw ValidationError(fmt::format("forecast horizon must be >= 1, got {}", horizon));
  if (!(riskMargin >= 0.0 && riskMargin < 1.0)) {
    throw ValidationError(fmt::format("risk margin must lie in [0, 1), got {}", riskMargin));
  }
  if (history.empty()) throw ValidationError(fmt::format("spec '{}': empty history", spec.name));

  const arima::Model model = cached ? arima::reanchor(*cached, history) : arima::fit(history, arima::kDefaultOrder);

  SpecAnalysis a;
  a.specName = spec.name;
  a.forecastValues = arima::forecast(model, horizon);
  if (spec.violatedBy(history.back())) {
    a.status = SpecStatus::Broken;
    return a;
  }
  for (std::size_t h = 0; h < a.forecastValues.size(); ++h) {
    if (withinRisk(spec, a.forecastValues[h], riskMargin)) {
      a.status = SpecStatus::AtRisk;
      a.firstViolationStep = static_cast<int>(h) + 1;
      break;
    }
  }
  return a;
}

double makeLatencyEstimate(const Tactic& t, std::span<const double> features, const regression::Model& m) {
  return estimate(t, features, m, "latency");
}

double makeCostEstimate(const Tactic& t, std::span<const double> features, const regression::Model& m) {
  return estimate(t, features, m, "cost");
}

std::vector<TacticEstimate> rankTactics(std::span<const TacticEstimate> estimates, const SpecAnalysis& analysis,
                                        double tickSeconds) {
  if (estimates.empty()) throw ValidationError("no tactic estimates to rank");
  if (!(tickSeconds > 0.0)) throw ValidationError("tick length must be > 0");

  auto ready = [&](const TacticEstimate& e) {
    switch (analysis.status) {
      case SpecStatus::Healthy: return true;
      case SpecStatus::Broken: return e.predictedLatency <= 0.0;
      case SpecStatus::AtRisk: break;
    }
    return e.predictedLatency <= analysis.firstViolationStep.value_or(0) * tickSeconds;
  };

  std::vector<std::size_t> order(estimates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const auto& a = estimates[i];
    const auto& b = estimates[j];
    const bool ra = ready(a), rb = ready(b);
    if (ra != rb) return ra;
    if (a.utilityScore != b.utilityScore) return a.utilityScore > b.utilityScore;
    return a.predictedCost < b.predictedCost;
  });
  std::vector<TacticEstimate> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(estimates[i]);
  return out;
}

double tacticUtility(const SlaSpec& spec, const SpecAnalysis& analysis, double latency, double cost,
                     const WorkflowConfig& config) {
  if (analysis.forecastValues.empty()) throw ValidationError("utility needs a forecast");
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(latency / config.tickSeconds)));
  const double landing = analysis.forecastValues[std::min(steps, analysis.forecastValues.size()) - 1];
  UtilityParams p = config.utility;
  // Orient so that r <= T means compliant for both bound directions.
  const bool upper = spec.direction == Direction::UpperBound;
  p.responseTime = upper ? landing : -landing;
  p.targetResponse = upper ? spec.threshold : -spec.threshold;
  p.cost = std::max(cost, config.costFloor);
  return utility(p);
}

std::vector<TickResult> workflowTick(std::span<const SlaSpec> specs, const std::map<std::string, TimeSeries>& histories,
                                     std::span<const Tactic> tactics, const ModelRegistry& models,
                                     const WorkflowConfig& config) {
  std::vector<TickResult> out;
  for (const auto& spec : orderSpecsByReward(specs)) {
    TickResult r;
    r.analysis.specName = spec.name;
    try {
      const auto hist = histories.find(spec.name);
      if (hist == histories.end()) throw ValidationError(fmt::format("spec '{}': no history", spec.name));
      const auto cached = models.forecasters.find(spec.name);
      r.analysis = analyzeSpecification(spec, hist->second, config.horizon, config.riskMargin,
                                        cached != models.forecasters.end() ? &cached->second : nullptr);
      if (r.analysis.status != SpecStatus::Healthy && !tactics.empty()) {
        std::vector<TacticEstimate> estimates;
        for (const auto& t : tactics) {
          const auto entry = models.tactics.find(t.name);
          if (entry == models.tactics.end()) {
            throw ValidationError(fmt::format("tactic '{}': no trained models", t.name));
          }
          TacticEstimate e;
          e.tacticName = t.name;
          e.predictedLatency = makeLatencyEstimate(t, entry->second.features, entry->second.latency);
          e.predictedCost = makeCostEstimate(t, entry->second.features, entry->second.cost);
          e.utilityScore = tacticUtility(spec, r.analysis, e.predictedLatency, e.predictedCost, config);
          estimates.push_back(std::move(e));
        }
        r.ranked = rankTactics(estimates, r.analysis, config.tickSeconds);
      }
    } catch (const Error& e) {
      r.error = e.what();
      r.ranked.clear();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MonitorTick> runMonitor(std::span<const SlaSpec> specs, const std::map<std::string, TimeSeries>& histories,
                                    std::span<const Tactic> tactics, const ModelRegistry& models,
                                    const MonitorConfig& config) {
  if (config.refitEvery < 0) throw ValidationError("refit period must be >= 0");
  std::size_t n = 0;
  for (const auto& spec : specs) {
    const auto it = histories.find(spec.name);
    if (it == histories.end()) throw ValidationError(fmt::format("spec '{}': no history", spec.name));
    n = n == 0 ? it->second.size() : std::min(n, it->second.size());
  }
  if (n < config.warmup) {
    throw ValidationError(fmt::format("histories have {} observations, warmup needs {}", n, config.warmup));
  }

  ModelRegistry registry = models;
  auto refit = [&](std::size_t length) {
    for (const auto& spec : specs) {
      try {
        registry.forecasters[spec.name] = arima::fit(histories.at(spec.name).head(length), arima::kDefaultOrder);
      } catch (const Error&) {
        // Left unfitted; workflowTick reports the error for this spec.
        registry.forecasters.erase(spec.name);
      }
    }
  };
  refit(config.warmup);

  std::vector<MonitorTick> out;
  for (std::size_t len = config.warmup; len <= n; ++len) {
    const std::size_t ticksSinceWarmup = len - config.warmup;
    if (config.refitEvery > 0 && ticksSinceWarmup > 0 && ticksSinceWarmup % static_cast<std::size_t>(config.refitEvery) == 0) {
      refit(len);
    }
    std::map<std::string, TimeSeries> prefix;
    for (const auto& spec : specs) prefix.emplace(spec.name, histories.at(spec.name).head(len));
    out.push_back(MonitorTick{len - 1, workflowTick(specs, prefix, tactics, registry, config.workflow)});
  }
  return out;
}

nlohmann::json toJson(const TickResult& r) {
  nlohmann::json j;
  j["name"] = r.analysis.specName;
  j["status"] = toString(r.analysis.status);
  j["first_violation_step"] =
      r.analysis.firstViolationStep ? nlohmann::json(*r.analysis.firstViolationStep) : nlohmann::json(nullptr);
  j["forecast"] = r.analysis.forecastValues;
  auto tactics = nlohmann::json::array();
  for (std::size_t i = 0; i < r.ranked.size(); ++i) {
    const auto& e = r.ranked[i];
    tactics.push_back({{"name", e.tacticName},
                       {"latency", e.predictedLatency},
                       {"cost", e.predictedCost},
                       {"utility", e.utilityScore},
                       {"rank", i + 1}});
  }
  j["tactics"] = std::move(tactics);
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

std::vector<SlaSpec> parseSpecs(const nlohmann::json& doc) {
  std::vector<SlaSpec> specs;
  const nlohmann::json* list = &doc;
  if (doc.is_object() && doc.contains("specs")) list = &doc.at("specs");
  if (list->is_array()) {
    for (std::size_t i = 0; i < list->size(); ++i) specs.push_back(parseSpec((*list)[i], i));
  } else {
    specs.push_back(parseSpec(*list, 0));
  }
  if (specs.empty()) throw ValidationError("spec file defines no specs");
  validateSpecs(specs);
  return specs;
}

}  // namespace tva::workflow

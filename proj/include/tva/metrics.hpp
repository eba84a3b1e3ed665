#pragma once

// Forecast/prediction scoring and the randomized replication harness.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tva/arima.hpp"
#include "tva/core.hpp"
#include "tva/regression.hpp"

namespace tva::metrics {

double rmse(std::span<const double> predicted, std::span<const double> actual);
double mae(std::span<const double> predicted, std::span<const double> actual);

struct ScorePair {
  double rmse = 0.0;
  double mae = 0.0;
};

ScorePair score(std::span<const double> predicted, std::span<const double> actual);

struct ExperimentReport {
  std::size_t runIndex = 0;
  std::string modelName;
  std::optional<ScorePair> scores;  // empty when the run failed
  std::string error;
  double trainFraction = 0.9;
  std::uint64_t seed = 0;

  bool ok() const noexcept { return scores.has_value(); }
};

/// Counter-based per-run seed: independent of run order.
std::uint64_t deriveSeed(std::uint64_t master, std::uint64_t index) noexcept;

struct Split {
  TimeSeries train;
  TimeSeries test;
  std::size_t testStart = 0;
};

inline constexpr std::size_t kMinTrainPoints = 12;
inline constexpr std::size_t kMinTestPoints = 10;

/// Contiguous test window of round((1 - trainFraction) * n) points at a
/// seeded uniform start; train is everything before the window.
Split splitTrainTest(const TimeSeries& s, double trainFraction, std::uint64_t seed);

struct ForecastExperimentConfig {
  double trainFraction = 0.9;
  arima::Order order = arima::kDefaultOrder;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Per run: split, fit ARIMA on train, forecast the test window, and score
/// both ARIMA ("arima") and a last-value forecaster ("persistence").
std::vector<ExperimentReport> runForecastExperiments(const TimeSeries& s, int nRuns, std::uint64_t seed,
                                                     const ForecastExperimentConfig& config = {});

struct PredictorExperimentConfig {
  double trainFraction = 0.9;
  regression::BayesianRidgeConfig brr;
  // Static value scored as "baseline_static".
  double staticValue = 0.0;
  unsigned threads = 0;
};

/// Per run: random row split, then scores "mra", "brr", "baseline_mean"
/// (mean of training responses) and "baseline_static" on the held-out rows.
std::vector<ExperimentReport> runPredictorExperiments(const regression::DesignMatrix& X,
                                                      std::span<const double> t, int nRuns,
                                                      std::uint64_t seed,
                                                      const PredictorExperimentConfig& config = {});

struct Aggregate {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct ModelSummary {
  std::string model;
  std::size_t runs = 0;
  std::size_t failures = 0;
  Aggregate rmse;
  Aggregate mae;
};

struct Summary {
  std::vector<ModelSummary> models;  // order of first appearance
  // wins[i][j]: runs where model i's rmse is strictly below model j's.
  std::vector<std::vector<std::size_t>> wins;

  const ModelSummary& model(const std::string& name) const;
  std::size_t winsOf(const std::string& a, const std::string& b) const;
};

Summary summarize(std::span<const ExperimentReport> reports);

/// Header `run,model,rmse,mae,train_fraction,seed`, 17 significant digits,
/// LF endings. Failed runs leave rmse and mae empty.
void writeReportCsv(std::ostream& out, std::span<const ExperimentReport> reports);

}  // namespace tva::metrics

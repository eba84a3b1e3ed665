#include "tva/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "tva/error.hpp"
#include "tva/kernels.hpp"

namespace tva::metrics {
namespace {

void checkPair(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    throw ValidationError(fmt::format("length mismatch: {} predictions vs {} actuals", predicted.size(), actual.size()));
  }
  if (predicted.empty()) throw ValidationError("cannot score empty vectors");
}

void checkFraction(double f) {
  if (!(f > 0.0 && f < 1.0)) throw ValidationError(fmt::format("train fraction must lie in (0, 1), got {}", f));
}

unsigned resolveThreads(unsigned requested, int nRuns) {
  unsigned t = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::min<unsigned>(t, static_cast<unsigned>(std::max(1, nRuns)));
}

// Runs body(run) for every run index; results land in per-run slots so the
// merged output is independent of scheduling.
template <typename Body>
std::vector<ExperimentReport> runBatch(int nRuns, unsigned threads, Body body) {
  if (nRuns < 1) throw ValidationError(fmt::format("number of runs must be >= 1, got {}", nRuns));
  std::vector<std::vector<ExperimentReport>> slots(static_cast<std::size_t>(nRuns));
  const unsigned workers = resolveThreads(threads, nRuns);
  if (workers <= 1) {
    for (int r = 0; r < nRuns; ++r) slots[static_cast<std::size_t>(r)] = body(static_cast<std::size_t>(r));
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (auto r = static_cast<std::size_t>(w); r < slots.size(); r += workers) slots[r] = body(r);
      });
    }
  }
  std::vector<ExperimentReport> out;
  for (auto& s : slots) std::move(s.begin(), s.end(), std::back_inserter(out));
  return out;
}

ExperimentReport failed(std::size_t run, std::string model, double fraction, std::uint64_t seed, std::string what) {
  ExperimentReport r;
  r.runIndex = run;
  r.modelName = std::move(model);
  r.trainFraction = fraction;
  r.seed = seed;
  r.error = std::move(what);
  return r;
}

ExperimentReport scored(std::size_t run, std::string model, double fraction, std::uint64_t seed, ScorePair s) {
  ExperimentReport r;
  r.runIndex = run;
  r.modelName = std::move(model);
  r.trainFraction = fraction;
  r.seed = seed;
  r.scores = s;
  return r;
}

Aggregate aggregate(const std::vector<double>& v) {
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                         std::numeric_limits<double>::quiet_NaN()};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()), *lo, *hi};
}

}  // namespace

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  checkPair(predicted, actual);
  return std::sqrt(simd::sumSquaredDiff(predicted, actual) / static_cast<double>(predicted.size()));
}

double mae(std::span<const double> predicted, std::span<const double> actual) {
  checkPair(predicted, actual);
  return simd::sumAbsDiff(predicted, actual) / static_cast<double>(predicted.size());
}

ScorePair score(std::span<const double> predicted, std::span<const double> actual) {
  return {rmse(predicted, actual), mae(predicted, actual)};
}

std::uint64_t deriveSeed(std::uint64_t master, std::uint64_t index) noexcept {
  // splitmix64 finalizer over (master, index).
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Split splitTrainTest(const TimeSeries& s, double trainFraction, std::uint64_t seed) {
  checkFraction(trainFraction);
  const std::size_t n = s.size();
  const auto testLen = static_cast<std::size_t>(std::llround((1.0 - trainFraction) * static_cast<double>(n)));
  if (testLen < kMinTestPoints || testLen > n || n - testLen < kMinTrainPoints) {
    throw ValidationError(fmt::format(
        "series of length {} too short for a {}/{} split (test window {} < {} or train < {})", n,
        trainFraction, 1.0 - trainFraction, testLen, kMinTestPoints, kMinTrainPoints));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(kMinTrainPoints, n - testLen);
  const std::size_t start = pick(rng);
  return Split{s.head(start), s.slice(start, testLen), start};
}

std::vector<ExperimentReport> runForecastExperiments(const TimeSeries& s, int nRuns, std::uint64_t seed,
                                                     const ForecastExperimentConfig& config) {
  checkFraction(config.trainFraction);
  const double fraction = config.trainFraction;
  return runBatch(nRuns, config.threads, [&](std::size_t run) {
    const std::uint64_t runSeed = deriveSeed(seed, run);
    std::vector<ExperimentReport> out;
    try {
      const Split split = splitTrainTest(s, fraction, runSeed);
      const auto actual = split.test.values();
      const std::vector<double> persistence(actual.size(), split.train.back());
      try {
        const auto model = arima::fit(split.train, config.order);
        const auto fc = arima::forecast(model, static_cast<int>(actual.size()));
        out.push_back(scored(run, "arima", fraction, runSeed, score(fc, actual)));
      } catch (const Error& e) {
        out.push_back(failed(run, "arima", fraction, runSeed, e.what()));
      }
      out.push_back(scored(run, "persistence", fraction, runSeed, score(persistence, actual)));
    } catch (const Error& e) {
      out.push_back(failed(run, "arima", fraction, runSeed, e.what()));
      out.push_back(failed(run, "persistence", fraction, runSeed, e.what()));
    }
    return out;
  });
}

std::vector<ExperimentReport> runPredictorExperiments(const regression::DesignMatrix& X, std::span<const double> t,
                                                      int nRuns, std::uint64_t seed,
                                                      const PredictorExperimentConfig& config) {
  checkFraction(config.trainFraction);
  if (X.rows() < 40) throw ValidationError(fmt::format("predictor experiments need N >= 40, got {}", X.rows()));
  if (t.size() != X.rows()) throw ValidationError("response length does not match design rows");
  const double fraction = config.trainFraction;
  const std::size_t n = X.rows();
  const auto testLen = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround((1.0 - fraction) * static_cast<double>(n))));

  return runBatch(nRuns, config.threads, [&](std::size_t run) {
    const std::uint64_t runSeed = deriveSeed(seed, run);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(runSeed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::span<const std::size_t> all(idx);
    const auto testIdx = all.first(testLen);
    const auto trainIdx = all.subspan(testLen);

    const auto Xtrain = X.selectRows(trainIdx);
    const auto Xtest = X.selectRows(testIdx);
    std::vector<double> ttrain, ttest;
    for (auto i : trainIdx) ttrain.push_back(t[i]);
    for (auto i : testIdx) ttest.push_back(t[i]);

    auto predictAll = [&](const regression::Model& m) {
      std::vector<double> y;
      y.reserve(Xtest.rows());
      for (std::size_t r = 0; r < Xtest.rows(); ++r) y.push_back(regression::predict(m, Xtest.row(r)).value);
      return y;
    };

    std::vector<ExperimentReport> out;
    auto attempt = [&](const std::string& name, auto&& predictions) {
      try {
        out.push_back(scored(run, name, fraction, runSeed, score(predictions(), ttest)));
      } catch (const Error& e) {
        out.push_back(failed(run, name, fraction, runSeed, e.what()));
      }
    };
    attempt("mra", [&] { return predictAll(regression::fitMra(Xtrain, ttrain)); });
    attempt("brr", [&] { return predictAll(regression::fitBayesianRidge(Xtrain, ttrain, config.brr)); });
    attempt("baseline_mean",
            [&] { return std::vector<double>(ttest.size(), regression::baselineMean(ttrain)); });
    attempt("baseline_static", [&] { return std::vector<double>(ttest.size(), config.staticValue); });
    return out;
  });
}

const ModelSummary& Summary::model(const std::string& name) const {
  for (const auto& m : models) {
    if (m.model == name) return m;
  }
  throw ValidationError(fmt::format("no model named '{}' in summary", name));
}

std::size_t Summary::winsOf(const std::string& a, const std::string& b) const {
  std::size_t ia = models.size(), ib = models.size();
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i].model == a) ia = i;
    if (models[i].model == b) ib = i;
  }
  if (ia == models.size() || ib == models.size()) {
    throw ValidationError(fmt::format("unknown model pair '{}' / '{}'", a, b));
  }
  return wins[ia][ib];
}

Summary summarize(std::span<const ExperimentReport> reports) {
  if (reports.empty()) throw ValidationError("cannot summarize an empty report list");
  Summary out;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<double>> rmses, maes;
  // run -> model index -> rmse
  std::map<std::size_t, std::map<std::size_t, double>> byRun;

  for (const auto& r : reports) {
    auto [it, inserted] = index.try_emplace(r.modelName, out.models.size());
    if (inserted) {
      out.models.push_back(ModelSummary{r.modelName, 0, 0, {}, {}});
      rmses.emplace_back();
      maes.emplace_back();
    }
    auto& m = out.models[it->second];
    ++m.runs;
    if (!r.ok()) {
      ++m.failures;
      continue;
    }
    rmses[it->second].push_back(r.scores->rmse);
    maes[it->second].push_back(r.scores->mae);
    byRun[r.runIndex][it->second] = r.scores->rmse;
  }
  for (std::size_t i = 0; i < out.models.size(); ++i) {
    out.models[i].rmse = aggregate(rmses[i]);
    out.models[i].mae = aggregate(maes[i]);
  }
  const std::size_t k = out.models.size();
  out.wins.assign(k, std::vector<std::size_t>(k, 0));
  for (const auto& [run, scores] : byRun) {
    for (const auto& [a, ra] : scores) {
      for (const auto& [b, rb] : scores) {
        if (ra < rb) ++out.wins[a][b];
      }
    }
  }
  return out;
}

void writeReportCsv(std::ostream& out, std::span<const ExperimentReport> reports) {
  out << "run,model,rmse,mae,train_fraction,seed\n";
  for (const auto& r : reports) {
    if (r.ok()) {
      out << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{}\n", r.runIndex, r.modelName, r.scores->rmse,
                         r.scores->mae, r.trainFraction, r.seed);
    } else {
      out << fmt::format("{},{},,,{:.17g},{}\n", r.runIndex, r.modelName, r.trainFraction, r.seed);
    }
  }
}

}  // namespace tva::metrics

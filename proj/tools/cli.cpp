#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "svg.hpp"
#include "tva/error.hpp"
#include "tva/metrics.hpp"
#include "tva/valet.hpp"
#include "tva/workflow.hpp"

namespace tva::cli {
namespace {

namespace fs = std::filesystem;

struct GenerateOptions {
  int minutes = 1440;
  std::uint64_t seed = 42;
  std::string out;
};

struct ReplicateOptions {
  std::string trace;
  bool emulate = false;
  int minutes = 1440;
  int runs = 50;
  int rq1Samples = 100;
  std::uint64_t seed = 42;
  double trainFraction = 0.9;
  std::string outDir = ".";
  bool svg = false;
  unsigned threads = 0;
};

struct MonitorOptions {
  std::string specFile;
  std::string historyFile;
  std::string trace;
  int minutes = 1440;
  std::uint64_t seed = 42;
  int horizon = 5;
  double riskMargin = 0.10;
  double tickSeconds = 6.0;
  std::size_t warmup = 12;
  int refitEvery = 0;
  std::string out;
};

std::ofstream openOut(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(fmt::format("cannot write '{}'", path.string()));
  return f;
}

void closeOut(std::ofstream& f, const fs::path& path) {
  f.close();
  if (!f) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

std::vector<valet::TraceRecord> loadOrEmulate(const std::string& trace, int minutes, std::uint64_t seed) {
  if (!trace.empty()) return valet::ingestTraceCsv(trace);
  return valet::generateTrace(minutes, seed);
}

// The download tactic as a legacy planner sees it: one fixed latency and cost.
Tactic staticDownloadTactic(const valet::VolatilityConfig& config) {
  double base = 0;
  for (auto m : valet::kMirrors) base += config.profile(m).baseLatency;
  base /= static_cast<double>(valet::kMirrors.size());
  return Tactic{"download", base, base * config.downloadWatts, valet::featureNames()};
}

std::vector<metrics::ExperimentReport> relabel(std::vector<metrics::ExperimentReport> reports,
                                               const std::vector<std::string>& keep, const std::string& suffix) {
  std::vector<metrics::ExperimentReport> out;
  for (auto& r : reports) {
    if (std::find(keep.begin(), keep.end(), r.modelName) == keep.end()) continue;
    r.modelName += suffix;
    out.push_back(std::move(r));
  }
  return out;
}

void writeReports(const fs::path& path, std::span<const metrics::ExperimentReport> reports) {
  auto f = openOut(path);
  metrics::writeReportCsv(f, reports);
  closeOut(f, path);
}

// "_latency" / "_cost" suffix; win counts only compare models on the same target.
std::string targetOf(const std::string& model) {
  for (const char* suffix : {"_latency", "_cost"}) {
    const std::string sfx(suffix);
    if (model.size() > sfx.size() && model.compare(model.size() - sfx.size(), sfx.size(), sfx) == 0) return sfx;
  }
  return {};
}

void printSummary(std::ostream& out, const std::string& title, std::span<const metrics::ExperimentReport> reports) {
  const auto s = metrics::summarize(reports);
  out << title << '\n';
  out << fmt::format("  {:<24} {:>5} {:>6} {:>12} {:>12} {:>12}\n", "model", "runs", "failed", "mean_rmse",
                     "mean_mae", "max_rmse");
  for (const auto& m : s.models) {
    out << fmt::format("  {:<24} {:>5} {:>6} {:>12.6f} {:>12.6f} {:>12.6f}\n", m.model, m.runs, m.failures,
                       m.rmse.mean, m.mae.mean, m.rmse.max);
  }
  for (std::size_t i = 0; i < s.models.size(); ++i) {
    for (std::size_t j = i + 1; j < s.models.size(); ++j) {
      if (targetOf(s.models[i].model) != targetOf(s.models[j].model)) continue;
      out << fmt::format("  wins {} vs {}: {} / {}\n", s.models[i].model, s.models[j].model, s.wins[i][j],
                         s.wins[j][i]);
    }
  }
}

double sampleSd(const std::vector<double>& v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

int cmdGenerate(const GenerateOptions& o, std::ostream& out) {
  const auto records = valet::generateTrace(o.minutes, o.seed);
  valet::writeTraceCsv(fs::path(o.out), records);
  const auto downloads = std::count_if(records.begin(), records.end(), [](const valet::TraceRecord& r) {
    return r.phase == valet::Phase::Downloading;
  });
  out << fmt::format("records {}\ndownload {}\n", records.size(), downloads);
  return kOk;
}

int cmdReplicate(const ReplicateOptions& o, std::ostream& out, std::ostream& err) {
  const fs::path dir(o.outDir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));

  const valet::VolatilityConfig config;
  const auto records = loadOrEmulate(o.emulate ? std::string() : o.trace, o.minutes, o.seed);

  // Two-tactic overall cost simulation.
  const auto a = valet::tacticA();
  const auto b = valet::tacticB();
  const auto rq1 = valet::runRq1Simulation(a, b, o.rq1Samples, o.seed);
  {
    auto f = openOut(dir / "rq1.csv");
    f << "sample,tactic,overall_cost\n";
    for (std::size_t i = 0; i < rq1.overallCostsA.size(); ++i) f << fmt::format("{},A,{:.17g}\n", i, rq1.overallCostsA[i]);
    for (std::size_t i = 0; i < rq1.overallCostsB.size(); ++i) f << fmt::format("{},B,{:.17g}\n", i, rq1.overallCostsB[i]);
    closeOut(f, dir / "rq1.csv");
    auto h = openOut(dir / "rq1_histogram.csv");
    h << "bin_start,bin_end,count_a,count_b\n";
    const auto& hist = rq1.histogram;
    for (std::size_t i = 0; i < hist.binStarts.size(); ++i) {
      h << fmt::format("{:g},{:g},{},{}\n", hist.binStarts[i], hist.binStarts[i] + hist.binWidth, hist.countsA[i],
                       hist.countsB[i]);
    }
    closeOut(h, dir / "rq1_histogram.csv");
  }

  // Forecasting idle energy.
  metrics::ForecastExperimentConfig fcfg;
  fcfg.trainFraction = o.trainFraction;
  fcfg.threads = o.threads;
  const auto rq2 = metrics::runForecastExperiments(valet::toIdleSeries(records, config.idleIntervalSeconds), o.runs,
                                                   o.seed, fcfg);

  // Latency and cost prediction on download rows.
  const auto ds = valet::toRegressionDataset(records);
  const auto legacy = staticDownloadTactic(config);
  metrics::PredictorExperimentConfig pcfg;
  pcfg.trainFraction = o.trainFraction;
  pcfg.threads = o.threads;
  pcfg.staticValue = regression::baselineStatic(legacy, regression::EstimateKind::Latency);
  const auto latency = metrics::runPredictorExperiments(ds.design, ds.latency, o.runs, o.seed, pcfg);
  pcfg.staticValue = regression::baselineStatic(legacy, regression::EstimateKind::Cost);
  const auto cost = metrics::runPredictorExperiments(ds.design, ds.cost, o.runs, o.seed, pcfg);

  auto rq3 = relabel(latency, {"mra", "brr"}, "_latency");
  for (auto& r : relabel(cost, {"mra", "brr"}, "_cost")) rq3.push_back(std::move(r));
  auto rq4 = relabel(latency, {"mra", "baseline_mean", "baseline_static"}, "_latency");
  for (auto& r : relabel(cost, {"mra", "baseline_mean", "baseline_static"}, "_cost")) rq4.push_back(std::move(r));

  writeReports(dir / "rq2.csv", rq2);
  writeReports(dir / "rq3.csv", rq3);
  writeReports(dir / "rq4.csv", rq4);
  if (o.svg) {
    writeRmseScatter(dir / "rq2.svg", "Idle energy forecast RMSE per run", rq2);
    writeRmseScatter(dir / "rq3.svg", "MRA vs BRR RMSE per run", rq3);
    writeRmseScatter(dir / "rq4.svg", "TVA vs baselines RMSE per run", rq4);
  }

  out << fmt::format("RQ1 overall cost (n = {})\n", o.rq1Samples);
  out << fmt::format("  tactic A sd {:.6f}\n  tactic B sd {:.6f}\n", sampleSd(rq1.overallCostsA),
                     sampleSd(rq1.overallCostsB));
  printSummary(out, "RQ2 idle energy forecasting", rq2);
  printSummary(out, "RQ3 MRA vs BRR", rq3);
  printSummary(out, "RQ4 TVA vs baselines", rq4);

  std::size_t total = 0, failedRuns = 0;
  for (const std::vector<metrics::ExperimentReport>* set : {&rq2, &std::as_const(rq3), &std::as_const(rq4)}) {
    for (const auto& r : *set) {
      ++total;
      if (!r.ok()) {
        ++failedRuns;
        err << fmt::format("run {} {}: {}\n", r.runIndex, r.modelName, r.error);
      }
    }
  }
  const bool enough = static_cast<double>(total - failedRuns) >= 0.9 * static_cast<double>(total);
  return enough ? kOk : kDomainError;
}

std::map<std::string, TimeSeries> readHistories(const fs::path& path, const std::vector<SlaSpec>& specs,
                                                double interval) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open history file '{}'", path.string()));
  std::string line;
  std::size_t lineNo = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> values;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (columns.empty()) {
      columns = fields;
      values.resize(columns.size());
      continue;
    }
    if (fields.size() != columns.size()) {
      throw ValidationError(fmt::format("{}:{}: expected {} fields, got {}", path.string(), lineNo, columns.size(),
                                        fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      try {
        std::size_t used = 0;
        values[c].push_back(std::stod(fields[c], &used));
        if (used != fields[c].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ValidationError(fmt::format("{}:{}: malformed value '{}' in column '{}'", path.string(), lineNo,
                                          fields[c], columns[c]));
      }
    }
  }
  std::map<std::string, TimeSeries> out;
  for (const auto& spec : specs) {
    const auto it = std::find(columns.begin(), columns.end(), spec.name);
    if (it == columns.end()) {
      throw ValidationError(fmt::format("{}: no column for spec '{}'", path.string(), spec.name));
    }
    out.emplace(spec.name, TimeSeries(values[static_cast<std::size_t>(it - columns.begin())], interval));
  }
  return out;
}

int cmdMonitor(const MonitorOptions& o, std::ostream& out) {
  std::ifstream specIn(o.specFile, std::ios::binary);
  if (!specIn) throw IoError(fmt::format("cannot open spec file '{}'", o.specFile));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(specIn);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(fmt::format("{}: invalid JSON: {}", o.specFile, e.what()));
  }
  const auto specs = workflow::parseSpecs(doc);
  const auto histories = readHistories(o.historyFile, specs, o.tickSeconds);

  // Tactic models: one download tactic per mirror, trained on the trace.
  const valet::VolatilityConfig vconfig;
  const auto records = loadOrEmulate(o.trace, o.minutes, o.seed);
  const auto ds = valet::toRegressionDataset(records);
  const auto latencyModel = regression::fitMra(ds.design, ds.latency);
  const auto costModel = regression::fitMra(ds.design, ds.cost);

  std::vector<Tactic> tactics;
  workflow::ModelRegistry registry;
  for (const auto& [mirror, features] : valet::latestFeatures(records)) {
    const auto& p = vconfig.profile(mirror);
    Tactic t{fmt::format("download_{}", valet::toString(mirror)), p.baseLatency, p.baseLatency * vconfig.downloadWatts,
             valet::featureNames()};
    registry.tactics[t.name] = workflow::TacticModels{latencyModel, costModel, features};
    tactics.push_back(std::move(t));
  }

  workflow::MonitorConfig mcfg;
  mcfg.workflow.horizon = o.horizon;
  mcfg.workflow.riskMargin = o.riskMargin;
  mcfg.workflow.tickSeconds = o.tickSeconds;
  mcfg.workflow.utility.tau = o.tickSeconds;
  mcfg.warmup = o.warmup;
  mcfg.refitEvery = o.refitEvery;
  const auto ticks = workflow::runMonitor(specs, histories, tactics, registry, mcfg);

  std::ofstream file;
  std::ostream* sink = &out;
  if (!o.out.empty()) {
    file = openOut(o.out);
    sink = &file;
  }
  for (const auto& tick : ticks) {
    for (const auto& r : tick.results) {
      auto j = workflow::toJson(r);
      j["tick"] = tick.tick;
      *sink << j.dump() << '\n';
    }
  }
  if (file.is_open()) closeOut(file, o.out);
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tactic-volatility-aware forecasting and decision engine"};
  app.set_config("--config", "", "TOML/INI file with option defaults; flags take precedence");
  app.require_subcommand(1);

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "Write an emulated volatility trace CSV");
  g->add_option("--minutes", gen.minutes, "Trace length in minutes")->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--out", gen.out, "Output CSV path")->required();

  ReplicateOptions rep;
  auto* r = app.add_subcommand("replicate", "Run the RQ1-RQ4 experiment protocols");
  auto* traceOpt = r->add_option("--trace", rep.trace, "Trace CSV to evaluate on");
  r->add_flag("--emulate", rep.emulate, "Use an emulated trace (default when --trace is absent)")->excludes(traceOpt);
  r->add_option("--minutes", rep.minutes, "Emulated trace length in minutes")->check(CLI::PositiveNumber);
  r->add_option("--runs", rep.runs, "Randomized runs per experiment")->check(CLI::PositiveNumber);
  r->add_option("--rq1-samples", rep.rq1Samples, "Simulated executions per tactic")->check(CLI::PositiveNumber);
  r->add_option("--seed", rep.seed, "Master seed");
  r->add_option("--train-fraction", rep.trainFraction, "Training share of each split")
      ->check(CLI::Range(0.0, 1.0));
  r->add_option("--out-dir", rep.outDir, "Directory for report CSVs");
  r->add_flag("--svg", rep.svg, "Also write RMSE scatter plots as SVG");
  r->add_option("--threads", rep.threads, "Worker threads (0 = all cores)");

  MonitorOptions mon;
  auto* m = app.add_subcommand("monitor", "Run the decision loop over a recorded history, JSON lines out");
  m->add_option("--spec", mon.specFile, "SLA spec JSON file")->required();
  m->add_option("--history", mon.historyFile, "History CSV: time column plus one column per spec")->required();
  m->add_option("--trace", mon.trace, "Trace CSV used to train tactic models (emulated if absent)");
  m->add_option("--minutes", mon.minutes, "Emulated training trace length")->check(CLI::PositiveNumber);
  m->add_option("--seed", mon.seed, "Seed for the emulated training trace");
  m->add_option("--horizon", mon.horizon, "Forecast horizon in ticks")->check(CLI::PositiveNumber);
  m->add_option("--risk-margin", mon.riskMargin, "Fraction of |threshold| counted as close to breaking")
      ->check(CLI::Range(0.0, 0.999999));
  m->add_option("--tick", mon.tickSeconds, "Seconds between history samples")->check(CLI::PositiveNumber);
  m->add_option("--warmup", mon.warmup, "Observations before the first tick")->check(CLI::Range(11, 1 << 30));
  m->add_option("--refit-every", mon.refitEvery, "Refit forecasters every K ticks (0 = fit once)")
      ->check(CLI::NonNegativeNumber);
  m->add_option("--out", mon.out, "Write JSON lines here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kIoError;
  }

  try {
    if (g->parsed()) return cmdGenerate(gen, out);
    if (r->parsed()) return cmdReplicate(rep, out, err);
    if (m->parsed()) return cmdMonitor(mon, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDomainError;
  }
  return kIoError;
}

}  // namespace tva::cli

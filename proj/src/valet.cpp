#include "tva/valet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "tva/error.hpp"

namespace tva::valet {
namespace {

constexpr std::string_view kHeader = "timestamp,mirror,phase,latency_seconds,energy_joules";
constexpr double kSecondsPerDay = 86400.0;

// Trace values carry six decimals so CSV round-trips are exact.
double quantize(double v) noexcept { return std::round(v * 1e6) / 1e6; }

double hourOfDay(std::int64_t timestamp) noexcept {
  const double secs = std::fmod(static_cast<double>(timestamp), kSecondsPerDay);
  return (secs < 0 ? secs + kSecondsPerDay : secs) / 3600.0;
}

Mirror parseMirror(std::string_view s, std::size_t line) {
  for (Mirror m : kMirrors) {
    if (s == toString(m)) return m;
  }
  throw ValidationError(fmt::format("line {}: unknown mirror '{}'", line, s));
}

Phase parsePhase(std::string_view s, std::size_t line) {
  for (Phase p : {Phase::Downloading, Phase::Idle, Phase::Grep}) {
    if (s == toString(p)) return p;
  }
  throw ValidationError(fmt::format("line {}: unknown phase '{}'", line, s));
}

double parseReal(std::string_view s, std::size_t line, std::string_view column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ValidationError(fmt::format("line {}: malformed {} '{}'", line, column, s));
  }
  if (v < 0.0) throw ValidationError(fmt::format("line {}: negative {} {}", line, column, s));
  return v;
}

std::vector<std::string_view> splitFields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

std::string_view toString(Mirror m) noexcept {
  switch (m) {
    case Mirror::Germany: return "germany";
    case Mirror::Massachusetts: return "massachusetts";
    case Mirror::Ontario: return "ontario";
  }
  return "germany";
}

std::string_view toString(Phase p) noexcept {
  switch (p) {
    case Phase::Downloading: return "download";
    case Phase::Idle: return "idle";
    case Phase::Grep: return "grep";
  }
  return "download";
}

void VolatilityConfig::validate() const {
  for (Mirror m : kMirrors) {
    const auto& p = profile(m);
    if (!(p.baseLatency > 0.0)) {
      throw ValidationError(fmt::format("mirror {}: base latency must be > 0", toString(m)));
    }
    if (!(p.noiseSd >= 0.0) || !(p.spikeMagnitude >= 0.0)) {
      throw ValidationError(fmt::format("mirror {}: noise and spike magnitude must be >= 0", toString(m)));
    }
    if (!(p.spikeProbability >= 0.0 && p.spikeProbability <= 1.0)) {
      throw ValidationError(fmt::format("mirror {}: spike probability must lie in [0, 1]", toString(m)));
    }
  }
  if (!(diurnalAmplitude >= 0.0 && diurnalAmplitude < 1.0)) {
    throw ValidationError("diurnal amplitude must lie in [0, 1)");
  }
  if (!(downloadWatts > 0.0) || !(idleBaseJoules > 0.0)) {
    throw ValidationError("download power and idle base energy must be > 0");
  }
  if (!(downloadEnergyNoiseSd >= 0.0) || !(idleNoiseSd >= 0.0)) {
    throw ValidationError("energy noise must be >= 0");
  }
  if (!(std::fabs(idleAr) < 1.0)) throw ValidationError("idle AR coefficient must satisfy |phi| < 1");
  if (!(idleIntervalSeconds > 0.0)) throw ValidationError("idle interval must be > 0");
  if (grepEveryMinutes < 0) throw ValidationError("grep period must be >= 0");
}

double diurnalMultiplier(const VolatilityConfig& config, double hourOfDay) noexcept {
  return 1.0 + config.diurnalAmplitude *
                   std::cos(2.0 * std::numbers::pi * (hourOfDay - config.diurnalPeakHour) / 24.0);
}

std::vector<TraceRecord> generateTrace(int durationMinutes, std::uint64_t seed, const VolatilityConfig& config) {
  if (durationMinutes < 1) throw ValidationError("trace duration must be >= 1 minute");
  config.validate();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<TraceRecord> out;
  out.reserve(static_cast<std::size_t>(durationMinutes) * 5);

  double idleLevel = config.idleBaseJoules;
  double idleStep = config.idleDriftJoules;

  for (int minute = 0; minute < durationMinutes; ++minute) {
    const std::int64_t t0 = config.startEpoch + static_cast<std::int64_t>(minute) * 60;
    for (std::size_t k = 0; k < kMirrors.size(); ++k) {
      const Mirror mirror = kMirrors[k];
      const auto& p = config.profile(mirror);
      const std::int64_t ts = t0 + static_cast<std::int64_t>(k) * 15;
      const double z = gauss(rng);
      const double spikeDraw = unit(rng);
      const double spikeScale = 0.5 + unit(rng);
      double latency = p.baseLatency * diurnalMultiplier(config, hourOfDay(ts)) * std::exp(p.noiseSd * z);
      if (spikeDraw < p.spikeProbability) latency += p.baseLatency * p.spikeMagnitude * spikeScale;
      const double energy = config.downloadWatts * latency + config.downloadEnergyNoiseSd * gauss(rng);
      out.push_back({ts, mirror, Phase::Downloading, quantize(latency), quantize(std::max(0.0, energy))});
    }

    idleStep = config.idleDriftJoules + config.idleAr * (idleStep - config.idleDriftJoules) +
               config.idleNoiseSd * gauss(rng);
    idleLevel += idleStep;
    out.push_back({t0 + 45, Mirror::Germany, Phase::Idle, 0.0, quantize(std::max(0.0, idleLevel))});

    if (config.grepEveryMinutes > 0 && minute % config.grepEveryMinutes == config.grepEveryMinutes - 1) {
      const double latency = 0.2 * std::exp(0.1 * gauss(rng));
      out.push_back({t0 + 50, Mirror::Germany, Phase::Grep, quantize(latency),
                     quantize(config.downloadWatts * 0.5 * latency)});
    }
  }
  return out;
}

void TacticProfile::validate() const {
  if (!(mean > 0.0)) throw ValidationError(fmt::format("tactic profile '{}': mean must be > 0", name));
  if (!(sd > 0.0)) throw ValidationError(fmt::format("tactic profile '{}': sd must be > 0", name));
  if (!std::isfinite(costPerUnitLatency)) {
    throw ValidationError(fmt::format("tactic profile '{}': cost must be finite", name));
  }
}

TacticProfile tacticA() { return {"A", 5.0, LatencyShape::PositiveSkew, 3.0, 0.5}; }
TacticProfile tacticB() { return {"B", 7.0, LatencyShape::Normal, 3.0, 0.5}; }

std::vector<double> sampleLatency(const TacticProfile& p, std::uint64_t seed, int n) {
  p.validate();
  if (n < 1) throw ValidationError("sample count must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  if (p.shape == LatencyShape::Normal) {
    std::normal_distribution<double> dist(p.mean, p.sd);
    while (out.size() < static_cast<std::size_t>(n)) {
      const double v = dist(rng);
      if (v >= 0.0) out.push_back(v);
    }
  } else {
    const double sigma2 = std::log1p((p.sd / p.mean) * (p.sd / p.mean));
    std::lognormal_distribution<double> dist(std::log(p.mean) - sigma2 / 2.0, std::sqrt(sigma2));
    for (int i = 0; i < n; ++i) out.push_back(dist(rng));
  }
  return out;
}

Rq1Result runRq1Simulation(const TacticProfile& a, const TacticProfile& b, int nRuns, std::uint64_t seed) {
  Rq1Result r;
  // Independent streams per tactic.
  const auto la = sampleLatency(a, seed * 2 + 1, nRuns);
  const auto lb = sampleLatency(b, seed * 2 + 2, nRuns);
  for (double v : la) r.overallCostsA.push_back(v * a.costPerUnitLatency);
  for (double v : lb) r.overallCostsB.push_back(v * b.costPerUnitLatency);

  auto& h = r.histogram;
  const double top = std::max(*std::max_element(r.overallCostsA.begin(), r.overallCostsA.end()),
                              *std::max_element(r.overallCostsB.begin(), r.overallCostsB.end()));
  const auto bins = static_cast<std::size_t>(std::floor(std::max(0.0, top) / h.binWidth)) + 1;
  h.countsA.assign(bins, 0);
  h.countsB.assign(bins, 0);
  for (std::size_t i = 0; i < bins; ++i) h.binStarts.push_back(static_cast<double>(i) * h.binWidth);
  auto binOf = [&](double v) {
    return std::min(bins - 1, static_cast<std::size_t>(std::floor(std::max(0.0, v) / h.binWidth)));
  };
  for (double v : r.overallCostsA) ++h.countsA[binOf(v)];
  for (double v : r.overallCostsB) ++h.countsB[binOf(v)];
  return r;
}

void writeTraceCsv(std::ostream& out, const std::vector<TraceRecord>& records) {
  out << kHeader << '\n';
  for (const auto& r : records) {
    out << fmt::format("{},{},{},{:.6f},{:.6f}\n", r.timestamp, toString(r.mirror), toString(r.phase),
                       r.latencySeconds, r.energyJoules);
  }
}

std::vector<TraceRecord> readTraceCsv(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t lineNo = 0;
  bool sawHeader = false;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!sawHeader) {
      if (line != kHeader) throw ValidationError(fmt::format("line 1: expected header '{}'", kHeader));
      sawHeader = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = splitFields(line);
    if (f.size() != 5) {
      throw ValidationError(fmt::format("line {}: expected 5 fields, got {}", lineNo, f.size()));
    }
    TraceRecord r;
    const auto [ptr, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), r.timestamp);
    if (ec != std::errc{} || ptr != f[0].data() + f[0].size()) {
      throw ValidationError(fmt::format("line {}: malformed timestamp '{}'", lineNo, f[0]));
    }
    r.mirror = parseMirror(f[1], lineNo);
    r.phase = parsePhase(f[2], lineNo);
    r.latencySeconds = parseReal(f[3], lineNo, "latency_seconds");
    r.energyJoules = parseReal(f[4], lineNo, "energy_joules");
    if (!out.empty() && r.timestamp <= out.back().timestamp) {
      throw ValidationError(fmt::format("line {}: timestamp {} is not after {}", lineNo, r.timestamp,
                                        out.back().timestamp));
    }
    out.push_back(r);
  }
  if (!sawHeader) throw ValidationError("trace CSV is empty");
  return out;
}

std::vector<TraceRecord> ingestTraceCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open trace file '{}'", path.string()));
  try {
    return readTraceCsv(in);
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void writeTraceCsv(const std::filesystem::path& path, const std::vector<TraceRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write trace file '{}'", path.string()));
  writeTraceCsv(out, records);
  if (!out) throw IoError(fmt::format("failed writing trace file '{}'", path.string()));
}

std::vector<std::string> featureNames() {
  return {"intercept", "latency_lag1", "latency_lag2", "latency_mean5",
          "hour_sin",  "hour_cos",     "mirror_massachusetts", "mirror_ontario"};
}

std::vector<double> featureVector(std::int64_t timestamp, Mirror mirror, std::span<const double> recent) {
  if (recent.size() < kLagWindow) {
    throw ValidationError(fmt::format("feature vector needs {} previous latencies, got {}", kLagWindow, recent.size()));
  }
  const auto window = recent.last(kLagWindow);
  double mean = 0.0;
  for (double v : window) mean += v;
  mean /= static_cast<double>(kLagWindow);
  const double angle = 2.0 * std::numbers::pi * hourOfDay(timestamp) / 24.0;
  return {1.0,
          window[kLagWindow - 1],
          window[kLagWindow - 2],
          mean,
          std::sin(angle),
          std::cos(angle),
          mirror == Mirror::Massachusetts ? 1.0 : 0.0,
          mirror == Mirror::Ontario ? 1.0 : 0.0};
}

double hourFromCyclic(double s, double c) noexcept {
  double angle = std::atan2(s, c);
  if (angle < 0) angle += 2.0 * std::numbers::pi;
  return angle * 24.0 / (2.0 * std::numbers::pi);
}

RegressionDataset toRegressionDataset(const std::vector<TraceRecord>& records) {
  const auto downloads = std::count_if(records.begin(), records.end(),
                                       [](const TraceRecord& r) { return r.phase == Phase::Downloading; });
  if (downloads < 8) {
    throw ValidationError(fmt::format("regression dataset needs at least 8 download records, got {}", downloads));
  }
  RegressionDataset ds{regression::DesignMatrix(featureNames()), {}, {}, {}};
  std::array<std::vector<double>, 3> history;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.phase != Phase::Downloading) continue;
    auto& h = history[static_cast<std::size_t>(r.mirror)];
    if (h.size() >= kLagWindow) {
      ds.design.appendRow(featureVector(r.timestamp, r.mirror, h));
      ds.latency.push_back(r.latencySeconds);
      ds.cost.push_back(r.energyJoules);
      ds.sourceRows.push_back(i);
    }
    h.push_back(r.latencySeconds);
  }
  return ds;
}

std::vector<std::pair<Mirror, std::vector<double>>> latestFeatures(const std::vector<TraceRecord>& records) {
  std::array<std::vector<double>, 3> history;
  std::array<std::int64_t, 3> lastTs{};
  for (const auto& r : records) {
    if (r.phase != Phase::Downloading) continue;
    history[static_cast<std::size_t>(r.mirror)].push_back(r.latencySeconds);
    lastTs[static_cast<std::size_t>(r.mirror)] = r.timestamp;
  }
  std::vector<std::pair<Mirror, std::vector<double>>> out;
  for (Mirror m : kMirrors) {
    const auto k = static_cast<std::size_t>(m);
    if (history[k].size() >= kLagWindow) out.emplace_back(m, featureVector(lastTs[k] + 60, m, history[k]));
  }
  return out;
}

TimeSeries toIdleSeries(const std::vector<TraceRecord>& records, double intervalSeconds) {
  std::vector<const TraceRecord*> idle;
  for (const auto& r : records) {
    if (r.phase == Phase::Idle) idle.push_back(&r);
  }
  if (idle.empty()) throw ValidationError("trace has no idle records");
  std::stable_sort(idle.begin(), idle.end(),
                   [](const TraceRecord* a, const TraceRecord* b) { return a->timestamp < b->timestamp; });
  std::vector<double> values;
  values.reserve(idle.size());
  for (const auto* r : idle) values.push_back(r->energyJoules);
  return TimeSeries(std::move(values), intervalSeconds);
}

}  // namespace tva::valet

#pragma once

// Emulated VALET-style volatility traces: per-minute file downloads from
// three mirrors (latency + energy), idle energy readings, and the two-tactic
// overall-cost simulation. Also reads and writes the trace CSV format.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "tva/core.hpp"
#include "tva/regression.hpp"

namespace tva::valet {

enum class Mirror { Germany, Massachusetts, Ontario };
enum class Phase { Downloading, Idle, Grep };

inline constexpr std::array<Mirror, 3> kMirrors{Mirror::Germany, Mirror::Massachusetts, Mirror::Ontario};

std::string_view toString(Mirror m) noexcept;
std::string_view toString(Phase p) noexcept;

struct TraceRecord {
  std::int64_t timestamp = 0;  // seconds since epoch
  Mirror mirror = Mirror::Germany;
  Phase phase = Phase::Downloading;
  double latencySeconds = 0.0;
  double energyJoules = 0.0;

  bool operator==(const TraceRecord&) const = default;
};

/// Download behaviour of one mirror. Latency is
/// base * diurnal(hour) * exp(noiseSd * N(0,1)), plus with probability
/// spikeProbability an extra base * spikeMagnitude * U(0.5, 1.5).
struct MirrorProfile {
  double baseLatency = 5.0;
  double noiseSd = 0.05;
  double spikeProbability = 0.01;
  double spikeMagnitude = 1.0;
};

/// Emulator knobs. The defaults are invented: they only aim for plausible
/// download times of a 75MB file and a slowly drifting idle draw, with
/// Germany the most volatile mirror.
struct VolatilityConfig {
  std::array<MirrorProfile, 3> mirrors{
      MirrorProfile{9.0, 0.10, 0.06, 1.2},  // germany
      MirrorProfile{6.0, 0.06, 0.01, 0.6},  // massachusetts
      MirrorProfile{4.5, 0.05, 0.01, 0.6},  // ontario
  };
  // Multiplier 1 + amplitude * cos(2*pi*(hour - peakHour)/24).
  double diurnalAmplitude = 0.3;
  double diurnalPeakHour = 20.0;
  double downloadWatts = 3.0;
  double downloadEnergyNoiseSd = 0.5;
  // Idle energy per sample: differences follow an AR(1) around a slow drift.
  double idleBaseJoules = 110.0;
  double idleDriftJoules = 0.01;
  double idleAr = 0.5;
  double idleNoiseSd = 0.02;
  double idleIntervalSeconds = 60.0;
  // A grep activity record every N minutes; 0 disables them.
  int grepEveryMinutes = 15;
  std::int64_t startEpoch = 1577836800;  // 2020-01-01T00:00:00Z

  const MirrorProfile& profile(Mirror m) const { return mirrors[static_cast<std::size_t>(m)]; }
  void validate() const;
};

/// One download record per mirror per minute, one idle record per minute, and
/// optional grep records. Deterministic for a given seed and config.
std::vector<TraceRecord> generateTrace(int durationMinutes, std::uint64_t seed, const VolatilityConfig& config = {});

/// Multiplier applied to mirror base latency at a fractional hour of day.
double diurnalMultiplier(const VolatilityConfig& config, double hourOfDay) noexcept;

enum class LatencyShape { Normal, PositiveSkew };

struct TacticProfile {
  std::string name;
  double costPerUnitLatency = 1.0;
  LatencyShape shape = LatencyShape::Normal;
  double mean = 1.0;
  double sd = 1.0;

  void validate() const;
};

/// The two sample tactics: A costs 5 per unit latency with a positively
/// skewed latency, B costs 7 with a normal one; both mean 3, sd 0.5.
TacticProfile tacticA();
TacticProfile tacticB();

/// Normal draws are resampled until non-negative. PositiveSkew is a lognormal
/// with sigma^2 = ln(1 + (sd/mean)^2), mu = ln(mean) - sigma^2/2.
std::vector<double> sampleLatency(const TacticProfile& p, std::uint64_t seed, int n);

struct Histogram {
  double binWidth = 5.0;
  std::vector<double> binStarts;
  std::vector<std::size_t> countsA;
  std::vector<std::size_t> countsB;
};

struct Rq1Result {
  std::vector<double> overallCostsA;
  std::vector<double> overallCostsB;
  Histogram histogram;
};

/// Overall cost per simulated execution = sampled latency * cost per unit.
Rq1Result runRq1Simulation(const TacticProfile& a, const TacticProfile& b, int nRuns, std::uint64_t seed);

/// Trace CSV: header `timestamp,mirror,phase,latency_seconds,energy_joules`,
/// six-decimal reals, LF endings on output, LF or CRLF accepted on input.
void writeTraceCsv(std::ostream& out, const std::vector<TraceRecord>& records);
std::vector<TraceRecord> readTraceCsv(std::istream& in);
std::vector<TraceRecord> ingestTraceCsv(const std::filesystem::path& path);
void writeTraceCsv(const std::filesystem::path& path, const std::vector<TraceRecord>& records);

/// Previous latencies per mirror used by the lag and rolling-mean features.
inline constexpr std::size_t kLagWindow = 5;

/// Column names of the regression features, intercept first.
std::vector<std::string> featureNames();

/// Feature vector for a download at `timestamp` from `mirror`, given that
/// mirror's most recent latencies (oldest first, at least kLagWindow).
std::vector<double> featureVector(std::int64_t timestamp, Mirror mirror, std::span<const double> recentLatencies);

struct RegressionDataset {
  regression::DesignMatrix design;
  std::vector<double> latency;
  std::vector<double> cost;
  // Index into the input records of each design row.
  std::vector<std::size_t> sourceRows;
};

/// Download rows only; rows without a full lag window for their mirror are
/// dropped.
RegressionDataset toRegressionDataset(const std::vector<TraceRecord>& records);

/// Latest feature vector per mirror (the features of a download issued
/// right after the trace ends), for mirrors with a full lag window.
std::vector<std::pair<Mirror, std::vector<double>>> latestFeatures(const std::vector<TraceRecord>& records);

/// Idle energy readings in timestamp order.
TimeSeries toIdleSeries(const std::vector<TraceRecord>& records, double intervalSeconds = 60.0);

/// Hour of day recovered from the (sin, cos) feature pair.
double hourFromCyclic(double s, double c) noexcept;

}  // namespace tva::valet

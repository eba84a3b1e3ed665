#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "tva/error.hpp"
#include "tva/regression.hpp"
#include "tva/valet.hpp"

using namespace tva;
using namespace tva::valet;

namespace {

std::size_t countPhase(const std::vector<TraceRecord>& t, Phase p) {
  return static_cast<std::size_t>(std::count_if(t.begin(), t.end(), [p](const auto& r) { return r.phase == p; }));
}

std::string csvOf(const std::vector<TraceRecord>& t) {
  std::ostringstream out;
  writeTraceCsv(out, t);
  return out.str();
}

std::vector<TraceRecord> parse(const std::string& s) {
  std::istringstream in(s);
  return readTraceCsv(in);
}

double hourOf(std::int64_t ts) { return static_cast<double>(((ts % 86400) + 86400) % 86400) / 3600.0; }

}  // namespace

TEST_SUITE("valet") {
  TEST_CASE("a day of trace") {
    const auto t = generateTrace(1440, 42);
    CHECK(countPhase(t, Phase::Downloading) == 1440 * 3);
    CHECK(countPhase(t, Phase::Idle) == 1440);
    CHECK(countPhase(t, Phase::Grep) == 96);
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i].timestamp > t[i - 1].timestamp);
    for (const auto& r : t) {
      CHECK(r.latencySeconds >= 0.0);
      CHECK(r.energyJoules >= 0.0);
    }
    CHECK(generateTrace(1440, 42) == t);
    CHECK(generateTrace(1440, 43) != t);
  }

  TEST_CASE("germany is the most volatile mirror") {
    const auto t = generateTrace(1440, 5);
    std::array<std::vector<double>, 3> lat;
    for (const auto& r : t) {
      if (r.phase == Phase::Downloading) lat[static_cast<std::size_t>(r.mirror)].push_back(r.latencySeconds);
    }
    const double g = oracle::sampleSd(lat[0]) / oracle::sampleMean(lat[0]);
    CHECK(g > oracle::sampleSd(lat[1]) / oracle::sampleMean(lat[1]));
    CHECK(g > oracle::sampleSd(lat[2]) / oracle::sampleMean(lat[2]));
  }

  TEST_CASE("noiseless trace follows the diurnal curve") {
    VolatilityConfig cfg;
    for (auto& m : cfg.mirrors) {
      m.noiseSd = 0.0;
      m.spikeProbability = 0.0;
    }
    cfg.downloadEnergyNoiseSd = 0.0;
    const auto t = generateTrace(120, 1, cfg);
    for (const auto& r : t) {
      if (r.phase != Phase::Downloading) continue;
      const double expected = cfg.profile(r.mirror).baseLatency * diurnalMultiplier(cfg, hourOf(r.timestamp));
      CHECK(r.latencySeconds == doctest::Approx(expected).epsilon(1e-6));
      CHECK(r.energyJoules == doctest::Approx(cfg.downloadWatts * r.latencySeconds).epsilon(1e-6));
    }
  }

  TEST_CASE("generator rejects bad config") {
    CHECK_THROWS_AS(generateTrace(0, 1), ValidationError);
    VolatilityConfig cfg;
    cfg.mirrors[0].spikeProbability = 1.5;
    CHECK_THROWS_AS(generateTrace(10, 1, cfg), ValidationError);
    cfg = {};
    cfg.idleAr = 1.0;
    CHECK_THROWS_AS(generateTrace(10, 1, cfg), ValidationError);
    cfg = {};
    cfg.mirrors[2].baseLatency = 0.0;
    CHECK_THROWS_AS(generateTrace(10, 1, cfg), ValidationError);
  }

  TEST_CASE("diurnal multiplier") {
    const VolatilityConfig cfg;
    CHECK(diurnalMultiplier(cfg, 20.0) == doctest::Approx(1.3));
    CHECK(diurnalMultiplier(cfg, 8.0) == doctest::Approx(0.7));
    CHECK(diurnalMultiplier(cfg, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("lognormal moment matching") {
    const double sigma2 = std::log1p((0.5 / 3.0) * (0.5 / 3.0));
    CHECK(std::sqrt(sigma2) == doctest::Approx(0.16553).epsilon(1e-4));
    CHECK(std::log(3.0) - sigma2 / 2.0 == doctest::Approx(1.08491).epsilon(1e-4));

    const int n = 100000;
    const auto a = sampleLatency(tacticA(), 11, n);
    const auto b = sampleLatency(tacticB(), 12, n);
    REQUIRE(a.size() == static_cast<std::size_t>(n));
    // Sample-mean standard error is 0.5/sqrt(n); allow 5 of them.
    const double tol = 5 * 0.5 / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(oracle::sampleMean(a) - 3.0) < tol);
    CHECK(std::fabs(oracle::sampleMean(b) - 3.0) < tol);
    CHECK(oracle::sampleSd(a) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(oracle::sampleSd(b) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(oracle::sampleSkewness(a) > 0.3);
    CHECK(std::fabs(oracle::sampleSkewness(b)) < 0.05);
    CHECK(*std::min_element(b.begin(), b.end()) >= 0.0);
    CHECK(*std::min_element(a.begin(), a.end()) > 0.0);

    CHECK(sampleLatency(tacticA(), 11, 100) == sampleLatency(tacticA(), 11, 100));
  }

  TEST_CASE("sampleLatency errors") {
    auto p = tacticB();
    p.sd = 0.0;
    CHECK_THROWS_AS(sampleLatency(p, 1, 10), ValidationError);
    p = tacticA();
    p.mean = -1.0;
    CHECK_THROWS_AS(sampleLatency(p, 1, 10), ValidationError);
    CHECK_THROWS_AS(sampleLatency(tacticA(), 1, 0), ValidationError);
  }

  TEST_CASE("RQ1 simulation") {
    const auto r = runRq1Simulation(tacticA(), tacticB(), 100, 42);
    CHECK(r.overallCostsA.size() == 100);
    CHECK(r.overallCostsB.size() == 100);
    std::size_t ha = 0, hb = 0;
    for (auto c : r.histogram.countsA) ha += c;
    for (auto c : r.histogram.countsB) hb += c;
    CHECK(ha == 100);
    CHECK(hb == 100);
    CHECK(r.histogram.binStarts.front() == 0.0);

    auto a = tacticA();
    auto b = tacticB();
    a.sd = b.sd = 1e-9;
    const auto d = runRq1Simulation(a, b, 50, 1);
    for (double v : d.overallCostsA) CHECK(v == doctest::Approx(15.0).epsilon(1e-6));
    for (double v : d.overallCostsB) CHECK(v == doctest::Approx(21.0).epsilon(1e-6));
  }

  TEST_CASE("RQ1 spread scales with cost per unit latency") {
    // Both tactics share latency sd 0.5, so overall-cost sd is 5*0.5 for A
    // and 7*0.5 for B regardless of the latency distribution shape.
    const auto r = runRq1Simulation(tacticA(), tacticB(), 10000, 42);
    CHECK(oracle::sampleSd(r.overallCostsA) == doctest::Approx(2.5).epsilon(0.03));
    CHECK(oracle::sampleSd(r.overallCostsB) == doctest::Approx(3.5).epsilon(0.03));
    CHECK(oracle::sampleSkewness(r.overallCostsA) > oracle::sampleSkewness(r.overallCostsB));
  }

  TEST_CASE("trace CSV parsing") {
    const std::string text =
        "timestamp,mirror,phase,latency_seconds,energy_joules\n"
        "1577836800,germany,download,9.100000,27.300000\n"
        "1577836815,massachusetts,download,6.000000,18.000000\n"
        "1577836845,germany,idle,0.000000,110.010000\n";
    const auto t = parse(text);
    REQUIRE(t.size() == 3);
    CHECK((t[1].mirror == Mirror::Massachusetts));
    CHECK((t[2].phase == Phase::Idle));
    CHECK(t[0].latencySeconds == 9.1);

    std::string crlf;
    for (char c : text) {
      if (c == '\n') crlf += '\r';
      crlf += c;
    }
    CHECK(parse(crlf) == t);
    CHECK(csvOf(t) == text);
  }

  TEST_CASE("trace CSV errors name the line") {
    const std::string header = "timestamp,mirror,phase,latency_seconds,energy_joules\n";
    auto message = [](const std::string& s) {
      try {
        parse(s);
      } catch (const ValidationError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(message(header + "1,germany,download,1.0,2.0\n2,germany,download,-1.0,2.0\n").find("line 3") !=
          std::string::npos);
    CHECK(message(header + "1,mars,download,1.0,2.0\n").find("line 2") != std::string::npos);
    CHECK(message(header + "1,germany,sleeping,1.0,2.0\n").find("line 2") != std::string::npos);
    CHECK(message(header + "1,germany,download,1.0\n").find("line 2") != std::string::npos);
    CHECK(message(header + "5,germany,idle,0,1\n5,germany,idle,0,1\n").find("line 3") != std::string::npos);
    CHECK(message("time,value\n").find("line 1") != std::string::npos);
    CHECK_FALSE(message("").empty());
    CHECK_THROWS_AS(ingestTraceCsv("/nonexistent/trace.csv"), IoError);
  }

  TEST_CASE("trace CSV round-trip is exact") {
    const auto t = generateTrace(300, 7);
    const auto text = csvOf(t);
    const auto back = parse(text);
    CHECK(back == t);
    CHECK(csvOf(back) == text);
  }

  TEST_CASE("regression dataset") {
    const auto t = generateTrace(200, 3);
    const auto ds = toRegressionDataset(t);
    CHECK(ds.design.rows() == 3 * (200 - kLagWindow));
    CHECK(ds.design.columnNames() == featureNames());
    CHECK(ds.latency.size() == ds.design.rows());
    CHECK(ds.cost.size() == ds.design.rows());
    for (std::size_t i = 0; i < ds.design.rows(); ++i) {
      const auto& src = t[ds.sourceRows[i]];
      CHECK((src.phase == Phase::Downloading));
      CHECK(ds.latency[i] == src.latencySeconds);
      CHECK(ds.design.at(i, 0) == 1.0);
    }
  }

  TEST_CASE("single mirror dataset") {
    std::vector<TraceRecord> t;
    for (int i = 0; i < 100; ++i) t.push_back({60 * i, Mirror::Ontario, Phase::Downloading, 4.0 + 0.01 * i, 12.0});
    const auto ds = toRegressionDataset(t);
    CHECK(ds.design.rows() == 95);
    // Lag 1 of row k is the latency of the previous record.
    CHECK(ds.design.at(0, 1) == t[4].latencySeconds);
    CHECK(ds.design.at(0, 2) == t[3].latencySeconds);
    CHECK(ds.design.at(0, 3) == doctest::Approx(4.02));
    CHECK(ds.design.at(0, 7) == 1.0);
    CHECK(ds.design.at(0, 6) == 0.0);
  }

  TEST_CASE("identical downloads still train") {
    std::vector<TraceRecord> t;
    for (int i = 0; i < 60; ++i) t.push_back({60 * i, Mirror::Germany, Phase::Downloading, 9.0, 27.0});
    const auto ds = toRegressionDataset(t);
    const auto m = regression::fitMra(ds.design, ds.latency);
    CHECK(m.ridgeLambda > 0.0);
    const auto p = regression::predict(m, ds.design.row(0));
    CHECK(p.value == doctest::Approx(9.0).epsilon(1e-5));
  }

  TEST_CASE("dataset errors") {
    std::vector<TraceRecord> t;
    for (int i = 0; i < 7; ++i) t.push_back({60 * i, Mirror::Germany, Phase::Downloading, 9.0, 27.0});
    CHECK_THROWS_AS(toRegressionDataset(t), ValidationError);
    const std::vector<double> few{1, 2, 3};
    CHECK_THROWS_AS(featureVector(0, Mirror::Germany, few), ValidationError);
  }

  TEST_CASE("latest features") {
    const auto t = generateTrace(30, 9);
    const auto f = latestFeatures(t);
    REQUIRE(f.size() == 3);
    for (const auto& [mirror, v] : f) CHECK(v.size() == featureNames().size());
    CHECK(latestFeatures(generateTrace(3, 9)).empty());
  }

  TEST_CASE("hour of day round-trips through the cyclic encoding") {
    for (int m = 0; m < 24 * 60; m += 7) {
      const std::int64_t ts = 1577836800 + 60 * m;
      const auto v = featureVector(ts, Mirror::Germany, std::vector<double>(5, 1.0));
      CHECK(hourFromCyclic(v[4], v[5]) == doctest::Approx(hourOf(ts)).epsilon(1e-9));
    }
  }

  TEST_CASE("idle series") {
    const auto t = generateTrace(240, 4);
    const auto s = toIdleSeries(t);
    CHECK(s.size() == 240);
    CHECK(s.interval() == 60.0);
    CHECK(s[0] == t[3].energyJoules);

    // Phases partition the trace.
    CHECK(countPhase(t, Phase::Idle) + countPhase(t, Phase::Downloading) + countPhase(t, Phase::Grep) == t.size());

    std::vector<TraceRecord> none{{0, Mirror::Germany, Phase::Downloading, 1, 1}};
    CHECK_THROWS_AS(toIdleSeries(none), ValidationError);
  }
}

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "tva");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = tva::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("tva_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

const std::string kData = TVA_DATA_DIR;

std::vector<nlohmann::json> jsonLines(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(nlohmann::json::parse(line));
  return out;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("generate is deterministic") {
    TempDir d;
    const auto a = run({"generate", "--minutes", "60", "--seed", "3", "--out", d / "a.csv"});
    const auto b = run({"generate", "--minutes", "60", "--seed", "3", "--out", d / "b.csv"});
    REQUIRE(a.code == tva::cli::kOk);
    CHECK(a.out == "records 244\ndownload 180\n");
    CHECK(a.out == b.out);
    CHECK(slurp(d / "a.csv") == slurp(d / "b.csv"));
    const auto c = run({"generate", "--minutes", "60", "--seed", "4", "--out", d / "c.csv"});
    CHECK(slurp(d / "a.csv") != slurp(d / "c.csv"));
  }

  TEST_CASE("usage and IO errors exit 2") {
    CHECK(run({"generate", "--minutes", "10", "--out", "/nonexistent/dir/t.csv"}).code == tva::cli::kIoError);
    CHECK(run({"generate", "--minutes", "10"}).code == tva::cli::kIoError);
    CHECK(run({"frobnicate"}).code == tva::cli::kIoError);
    CHECK(run({}).code == tva::cli::kIoError);
    CHECK(run({"--help"}).code == tva::cli::kOk);
  }

  TEST_CASE("replicate writes reports and is deterministic") {
    TempDir d;
    const std::vector<std::string> base{"replicate", "--runs", "3", "--minutes", "600", "--rq1-samples", "50",
                                        "--seed", "9", "--svg", "--out-dir"};
    auto argsA = base;
    argsA.push_back(d / "a");
    auto argsB = base;
    argsB.push_back(d / "b");
    const auto a = run(argsA);
    const auto b = run(argsB);
    REQUIRE(a.code == tva::cli::kOk);
    CHECK(a.out == b.out);
    for (const char* f : {"rq1.csv", "rq1_histogram.csv", "rq2.csv", "rq3.csv", "rq4.csv"}) {
      const auto pa = fs::path(d / "a") / f;
      REQUIRE(fs::exists(pa));
      CHECK(slurp(pa) == slurp(fs::path(d / "b") / f));
    }
    CHECK(slurp(fs::path(d / "a") / "rq1.csv").rfind("sample,tactic,overall_cost\n", 0) == 0);
    bool anySvg = false;
    for (const auto& e : fs::directory_iterator(d / "a")) anySvg |= e.path().extension() == ".svg";
    CHECK(anySvg);
  }

  TEST_CASE("replicate on a recorded trace") {
    TempDir d;
    REQUIRE(run({"generate", "--minutes", "600", "--seed", "1", "--out", d / "t.csv"}).code == 0);
    const auto r = run({"replicate", "--trace", d / "t.csv", "--runs", "2", "--rq1-samples", "10", "--out-dir",
                        d / "out"});
    CHECK(r.code == tva::cli::kOk);
    CHECK(run({"replicate", "--trace", d / "missing.csv", "--runs", "2"}).code == tva::cli::kIoError);
    CHECK(run({"replicate", "--trace", d / "t.csv", "--emulate"}).code == tva::cli::kIoError);
  }

  TEST_CASE("monitor on the flat history is healthy throughout") {
    const auto r = run({"monitor", "--spec", kData + "/response_time_spec.json", "--history",
                        kData + "/history_flat.csv", "--minutes", "120"});
    REQUIRE(r.code == tva::cli::kOk);
    const auto lines = jsonLines(r.out);
    CHECK(lines.size() == 40 - 12 + 1);
    for (const auto& j : lines) {
      CHECK(j["status"] == "healthy");
      CHECK(j["tactics"].empty());
    }
  }

  TEST_CASE("monitor on the ramp warns before the threshold is crossed") {
    const std::vector<std::string> args{"monitor", "--spec", kData + "/response_time_spec.json", "--history",
                                        kData + "/history_ramp.csv", "--minutes", "120"};
    const auto r = run(args);
    REQUIRE(r.code == tva::cli::kOk);
    int firstAtRisk = -1, firstBroken = -1;
    for (const auto& j : jsonLines(r.out)) {
      const int tick = j["tick"];
      if (j["status"] == "at_risk" && firstAtRisk < 0) {
        firstAtRisk = tick;
        CHECK(j["tactics"].size() == 3);
      }
      if (j["status"] == "broken" && firstBroken < 0) firstBroken = tick;
    }
    CHECK(firstAtRisk >= 0);
    CHECK(firstBroken > firstAtRisk);
    CHECK(run(args).out == r.out);
  }

  TEST_CASE("monitor errors") {
    TempDir d;
    const auto spec = kData + "/response_time_spec.json";
    CHECK(run({"monitor", "--spec", spec, "--history", d / "none.csv"}).code == tva::cli::kIoError);
    CHECK(run({"monitor", "--spec", d / "none.json", "--history", kData + "/history_flat.csv"}).code ==
          tva::cli::kIoError);

    {
      std::ofstream(d / "bad.json") << R"({"name":"response_time","threshold":"x"})";
    }
    const auto bad = run({"monitor", "--spec", d / "bad.json", "--history", kData + "/history_flat.csv"});
    CHECK(bad.code == tva::cli::kDomainError);
    CHECK(bad.err.find("threshold") != std::string::npos);
    CHECK(bad.out.empty());

    {
      std::ofstream(d / "broken.json") << "{not json";
    }
    CHECK(run({"monitor", "--spec", d / "broken.json", "--history", kData + "/history_flat.csv"}).code ==
          tva::cli::kDomainError);

    {
      std::ofstream(d / "other.json") << R"({"name":"cpu","threshold":1})";
    }
    CHECK(run({"monitor", "--spec", d / "other.json", "--history", kData + "/history_flat.csv"}).code ==
          tva::cli::kDomainError);
  }

  TEST_CASE("config file supplies defaults that flags override") {
    TempDir d;
    {
      std::ofstream(d / "tva.ini") << "[monitor]\nhorizon=2\nminutes=120\n";
    }
    const std::vector<std::string> base{"--config", d / "tva.ini", "monitor", "--spec",
                                        kData + "/response_time_spec.json", "--history",
                                        kData + "/history_flat.csv"};
    const auto fromConfig = run(base);
    REQUIRE(fromConfig.code == tva::cli::kOk);
    CHECK(jsonLines(fromConfig.out).front()["forecast"].size() == 2);

    auto overridden = base;
    overridden.insert(overridden.end(), {"--horizon", "4"});
    const auto fromFlag = run(overridden);
    REQUIRE(fromFlag.code == tva::cli::kOk);
    CHECK(jsonLines(fromFlag.out).front()["forecast"].size() == 4);
  }

  TEST_CASE("monitor writes to a file") {
    TempDir d;
    const auto r = run({"monitor", "--spec", kData + "/response_time_spec.json", "--history",
                        kData + "/history_flat.csv", "--minutes", "120", "--out", d / "ticks.jsonl"});
    REQUIRE(r.code == tva::cli::kOk);
    CHECK(r.out.empty());
    CHECK(jsonLines(slurp(d / "ticks.jsonl")).size() == 29);
  }
}

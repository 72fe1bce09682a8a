#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sfwm/commands.hpp"
#include "sfwm/config.hpp"
#include "sfwm/errors.hpp"

namespace fs = std::filesystem;
using sfwm::config::Json;

namespace {

const fs::path kScratchRoot = fs::temp_directory_path() / ("sfwm_cli_test_" + std::to_string(::getpid()));

struct ScratchCleanup {
  ~ScratchCleanup() {
    std::error_code ec;
    fs::remove_all(kScratchRoot, ec);
  }
} cleanup;

fs::path scratch(const std::string& name) {
  const fs::path p = kScratchRoot / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = std::string(SFWM_CLI_PATH) + " " + args + " --out " + dir.string() + " >" +
                          (dir / "stdout.txt").string() + " 2>" + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const Json& j) {
  const auto p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("configuration layers merge recursively") {
  Json base = {{"pump", {{"wavelength_nm", 729.0}, {"bandwidth_nm", 3.1}}}, {"seed", 1}};
  sfwm::config::merge_into(base, Json{{"pump", {{"bandwidth_nm", 2.0}}}, {"seed", 5}});
  CHECK(base["pump"]["wavelength_nm"].get<double>() == 729.0);
  CHECK(base["pump"]["bandwidth_nm"].get<double>() == 2.0);
  CHECK(base["seed"].get<int>() == 5);

  const auto rc = sfwm::config::resolve("jsa", Json{{"pump", {{"bandwidth_nm", 2.5}}}}, std::nullopt, 9, 2);
  CHECK(rc.pump.bandwidth_nm == 2.5);
  CHECK(rc.pump.wavelength_nm == 729.0);
  CHECK(rc.seed == 9);
  CHECK(rc.threads == 2);
  CHECK(rc.document.contains("material"));
  CHECK_FALSE(rc.document.contains("threads"));
}

TEST_CASE("schema and command requirements") {
  using sfwm::ConfigError;
  CHECK_THROWS_AS(sfwm::config::resolve("jsa", Json{{"bogus", Json::object()}}, std::nullopt, std::nullopt, std::nullopt), ConfigError);
  CHECK_THROWS_AS(sfwm::config::resolve("jsa", Json{{"pump", {{"colour", 1}}}}, std::nullopt, std::nullopt, std::nullopt), ConfigError);
  CHECK_THROWS_AS(sfwm::config::resolve("jsa", Json{{"pump", {{"bandwidth_nm", "wide"}}}}, std::nullopt, std::nullopt, std::nullopt), ConfigError);
  // sweep commands need their sweep block, count-sim its detector and noise blocks
  CHECK_THROWS_AS(sfwm::config::resolve("phasematch-curve", Json::object(), std::nullopt, std::nullopt, std::nullopt), ConfigError);
  CHECK_THROWS_AS(sfwm::config::resolve("phasematch-curve",
                                        Json{{"sweep", {{"parameter", "delta_dn"}, {"start", 0.0}, {"stop", 1e-6}, {"steps", 2}}}},
                                        std::nullopt, std::nullopt, std::nullopt),
                  ConfigError);
  Json count = sfwm::config::preset("paper", "count-sim");
  count.erase("detector");
  CHECK_THROWS_AS(sfwm::config::resolve("count-sim", count, std::nullopt, std::nullopt, std::nullopt), ConfigError);
  CHECK_THROWS_AS(sfwm::config::resolve("sweep-inhomogeneity", Json{{"waveguide", {{"ensemble", 10}}}}, std::string("paper"),
                                        std::nullopt, std::nullopt),
                  ConfigError);
  CHECK_THROWS_AS(sfwm::config::resolve("jsa", Json::object(), std::string("nonesuch"), std::nullopt, std::nullopt), ConfigError);
  CHECK_NOTHROW(sfwm::config::resolve("count-sim", Json::object(), std::string("paper"), std::nullopt, std::nullopt));
}

TEST_CASE("sweep values are inclusive") {
  sfwm::config::SweepSpec s{"pump_wavelength_nm", 700, 1100, 41};
  const auto v = s.values();
  REQUIRE(v.size() == 41);
  CHECK(v.front() == 700);
  CHECK(v.back() == 1100);
  CHECK(v[29] == doctest::Approx(990));
  CHECK(sfwm::config::SweepSpec{"pump_wavelength_nm", 729, 729, 1}.values() == std::vector<double>{729});
}

TEST_CASE("band exit interpolates the first crossing") {
  CHECK(sfwm::commands::band_exit({0, 1, 2, 3}, {0.86, 0.85, 0.83, 0.81}, 0.82, 0.90) == doctest::Approx(2.5));
  CHECK(sfwm::commands::band_exit({0, 1, 2}, {0.86, 0.91, 0.95}, 0.82, 0.90) == doctest::Approx(0.8));
  CHECK(std::isnan(sfwm::commands::band_exit({0, 1}, {0.86, 0.85}, 0.82, 0.90)));
}

TEST_CASE("phasematch-curve: single step and energy identity") {
  const auto dir = scratch("single");
  const auto cfg = write_config(dir, {{"sweep", {{"parameter", "pump_wavelength_nm"}, {"start", 729.0}, {"stop", 729.0}, {"steps", 1}}}});
  REQUIRE(run_cli("phasematch-curve --config " + cfg.string(), dir) == 0);
  const auto rows = read_csv(dir / "phasematch-curve.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"pump_nm", "signal_nm", "idler_nm", "status"});
  const double lp = std::stod(rows[1][0]), ls = std::stod(rows[1][1]), li = std::stod(rows[1][2]);
  CHECK(ls == doctest::Approx(676).epsilon(3.0 / 676));
  CHECK(li == doctest::Approx(790).epsilon(3.0 / 790));
  CHECK(std::abs((1 / ls + 1 / li) - 2 / lp) * lp / 2 < 1e-12);
  const auto report = Json::parse(slurp(dir / "phasematch-curve.report.json"));
  CHECK(report["status"] == "ok");
  CHECK(report["config"]["waveguide"]["length_cm"].get<double>() == 4.0);
  CHECK(report["config"].contains("pump"));
}

TEST_CASE("phasematch-curve keeps failed rows with a sentinel status") {
  const auto dir = scratch("sentinel");
  const auto cfg = write_config(dir, {{"sweep", {{"parameter", "pump_wavelength_nm"}, {"start", 1100.0}, {"stop", 1400.0}, {"steps", 4}}}});
  REQUIRE(run_cli("phasematch-curve --config " + cfg.string(), dir) == 0);
  const auto rows = read_csv(dir / "phasematch-curve.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[1][3] == "ok");
  CHECK(rows[4][3] == "no_phasematch");
  CHECK(rows[4][1].empty());
  const auto report = Json::parse(slurp(dir / "phasematch-curve.report.json"));
  CHECK(report["status"] == "partial");
  CHECK(report["failed_rows"].size() >= 1);
  CHECK(report["failed_rows"].back()["pump_nm"].get<double>() == 1400.0);
}

TEST_CASE("configuration errors exit with code 2 and a JSON report") {
  const auto dir = scratch("bad");
  const auto cfg = write_config(dir, {{"pump", {{"colour", "blue"}}}});
  CHECK(run_cli("jsa --config " + cfg.string(), dir) == 2);
  const auto report = Json::parse(slurp(dir / "jsa.report.json"));
  CHECK(report["status"] == "error");
  CHECK(run_cli("jsa --preset nonesuch", dir) == 2);
  CHECK(run_cli("jsa --bogus-flag", dir) == 2);
  const auto narrow = write_config(dir, {{"grid", {{"points", 64}, {"signal_span_nm", 2.0}}}});
  CHECK(run_cli("jsa --config " + narrow.string(), dir) == 2);
  CHECK(slurp(dir / "stderr.txt").find("signal span") != std::string::npos);
}

TEST_CASE("jsa emits matrix, marginals, contours and summary") {
  const auto dir = scratch("jsa");
  const auto cfg = write_config(dir, {{"grid", {{"points", 96}}}});
  REQUIRE(run_cli("jsa --config " + cfg.string(), dir) == 0);
  const auto m = read_csv(dir / "jsa.csv");
  REQUIRE(m.size() == 97);
  CHECK(m[0].size() == 97);
  CHECK(fs::exists(dir / "jsa.marginals.csv"));
  CHECK(read_csv(dir / "jsa.contours.csv")[0][0] == "track");
  const auto report = Json::parse(slurp(dir / "jsa.report.json"));
  const double p = report["results"]["schmidt"]["purity"].get<double>();
  CHECK(p > 0.80);
  CHECK(p < 0.90);
  CHECK(report["results"]["schmidt"]["g2_ss_predicted"].get<double>() == doctest::Approx(1 + p));
}

TEST_CASE("count-sim flags undefined estimators at zero power without failing") {
  const auto dir = scratch("zero");
  const Json cfg = {{"sweep", {{"parameter", "pump_power_mw"}, {"start", 0.0}, {"stop", 25.0}, {"steps", 2}}},
                    {"counting", {{"pulses", 20000}}},
                    {"grid", {{"points", 64}}},
                    {"noise", {{"raman_idler_per_mw", 0.0}}},
                    {"source", {{"modes", "single"}}}};
  REQUIRE(run_cli("count-sim --preset paper --config " + write_config(dir, cfg).string(), dir) == 0);
  const auto rows = read_csv(dir / "count-sim.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0][0] == "power_mw");
  CHECK(rows[1].back().find("undefined") != std::string::npos);
  const auto report = Json::parse(slurp(dir / "count-sim.report.json"));
  CHECK(report["status"] == "partial");
}

TEST_CASE("outputs are byte-identical across reruns and thread counts") {
  struct Case {
    std::string command;
    Json config;
  };
  const std::vector<Case> cases = {
      {"phasematch-curve", Json::object()},
      {"jsa", {{"grid", {{"points", 64}}}}},
      {"sweep-pump-bandwidth", {{"grid", {{"points", 64}}}, {"sweep", {{"steps", 4}}}}},
      {"sweep-inhomogeneity", {{"grid", {{"points", 64}}}, {"sweep", {{"stop", 4e-6}, {"steps", 3}}}, {"waveguide", {{"ensemble", 20}, {"segments", 40}}}}},
      {"count-sim", {{"grid", {{"points", 64}}}, {"sweep", {{"steps", 3}}}, {"counting", {{"pulses", 150000}, {"block_size", 8192}}}}},
  };
  for (const auto& c : cases) {
    CAPTURE(c.command);
    std::vector<std::string> csv, report;
    int k = 0;
    for (const char* threads : {"1", "1", "3"}) {
      const auto dir = scratch(c.command + "_" + std::to_string(k++));
      const auto cfg = write_config(dir, c.config);
      REQUIRE(run_cli(c.command + " --preset paper --seed 42 --threads " + threads + " --config " + cfg.string(), dir) == 0);
      csv.push_back(slurp(dir / (c.command + ".csv")));
      report.push_back(slurp(dir / (c.command + ".report.json")));
    }
    CHECK(!csv[0].empty());
    CHECK(csv[0] == csv[1]);
    CHECK(csv[0] == csv[2]);
    CHECK(report[0] == report[1]);
    CHECK(report[0] == report[2]);
  }
}

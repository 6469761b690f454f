#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "contagion/charts.hpp"
#include "contagion/cli.hpp"
#include "contagion/ingest.hpp"
#include "contagion/reconstruction.hpp"

using namespace contagion;
namespace fs = std::filesystem;

namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = contagion::cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("contagion_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("run twice gives byte-identical artifacts") {
  const auto a = scratch("run_a"), b = scratch("run_b");
  for (const auto& dir : {a, b}) {
    const auto r = invoke({"run", "--synthetic", "n=10", "--realizations", "1", "--seed", "7",
                        "--charts", "--matrix-dump", "-o", dir.string()});
    REQUIRE(r.status == 0);
  }
  const auto ta = tree(a), tb = tree(b);
  CHECK(ta == tb);
  CHECK(ta.count("report.json"));
  CHECK(ta.count("series/run_00000.csv"));
  CHECK(ta.count("network.csv"));
  CHECK(ta.count("population.csv"));
  for (const char* panel : kPanelNames) CHECK(ta.count(std::string("charts/") + panel + ".svg"));
  CHECK(ta.at("series/run_00000.csv").starts_with("t,rate,rel_equity,defaulted_frac,gamma\n"));
}

TEST_CASE("eps_c = 1 freezes every run at t = 1") {
  const auto dir = scratch("eps1");
  const auto r = invoke({"run", "--synthetic", "n=12,seed=3", "-n", "5", "--set", "eps_c=1.0",
                      "-o", dir.string()});
  REQUIRE(r.status == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report["parameters"]["eps_c"] == 1.0);
  CHECK(report["converged"] == 5);
  CHECK(report["metrics"]["t_c"]["min"] == 1.0);
  CHECK(report["metrics"]["t_c"]["max"] == 1.0);
  for (int k = 0; k < 5; ++k) {
    const auto s = load_series(dir / "series" / fmt::format("run_{:05}.csv", k));
    CHECK(s.size() == 2);
  }
}

TEST_CASE("sweep writes one series set per policy and combined charts") {
  const auto dir = scratch("sweep");
  const auto r = invoke({"sweep", "--synthetic", "n=15", "-n", "2", "--policies",
                      "A_max,A_min,B_max,B_min,K_max,K_min", "--charts", "-o", dir.string()});
  REQUIRE(r.status == 0);
  for (const char* policy : {"A_max", "A_min", "B_max", "B_min", "K_max", "K_min"}) {
    CAPTURE(policy);
    CHECK(fs::exists(dir / policy / "report.json"));
    CHECK(fs::exists(dir / policy / "series" / "run_00000.csv"));
    CHECK(fs::exists(dir / policy / "series" / "run_00001.csv"));
    const auto report = nlohmann::json::parse(slurp(dir / policy / "report.json"));
    CHECK(report["fixed_network"] == true);
    CHECK(report["policy"] == policy);
  }
  std::size_t charts = 0;
  for (const auto& e : fs::directory_iterator(dir / "charts")) {
    ++charts;
    CHECK(count(slurp(e.path()), "<polyline") == 6);
  }
  CHECK(charts == 4);
}

TEST_CASE("charts render the series files") {
  const auto dir = scratch("chart");
  const std::vector<SeriesPoint> s = {{0, 1, 1, 0, 0}, {1, 1.001, 0.8, 0.1, 0.25}};
  save_series(dir / "x.csv", s);
  CHECK(load_series(dir / "x.csv") == s);
  const auto written = write_panel_charts(dir / "charts", {{"x", dir / "x.csv"}});
  CHECK(written.size() == 4);
  const auto svg = slurp(dir / "charts" / "gamma.svg");
  CHECK(svg.starts_with("<svg"));
  CHECK(count(svg, "<polyline") == 1);
}

TEST_CASE("series files round-trip exactly") {
  const std::vector<SeriesPoint> s = {{0, 1.0, 1.0, 0.0, 0.0},
                                      {1, 1.0 / 3.0, 0.1 + 0.2, 1.0 / 183.0, 1e-300}};
  std::ostringstream out;
  write_series(out, s);
  std::istringstream in(out.str());
  CHECK(read_series(in) == s);
}

TEST_CASE("validate") {
  const auto dir = scratch("validate");
  SUBCASE("two valid banks") {
    std::ofstream(dir / "ok.csv") << kBalanceSheetHeader << "\na,10,5,2,2\nb,20,12,2,2\n";
    const auto r = invoke({"validate", (dir / "ok.csv").string()});
    CHECK(r.status == 0);
    CHECK(count(r.out, "\n") == 3);
    CHECK(r.out.find("a,5,2.4,yes") != std::string::npos);
  }
  SUBCASE("insolvent bank") {
    std::ofstream(dir / "bad.csv") << kBalanceSheetHeader << "\na,10,5,2,2\nweak,1,9,2,2\n";
    const auto r = invoke({"validate", (dir / "bad.csv").string()});
    CHECK(r.status != 0);
    CHECK(r.err.find("weak") != std::string::npos);
  }
  SUBCASE("malformed row") {
    std::ofstream(dir / "broken.csv") << kBalanceSheetHeader << "\na,10,5,2,2\nb,1,x,2,2\n";
    const auto r = invoke({"validate", (dir / "broken.csv").string()});
    CHECK(r.status != 0);
    CHECK(r.err.find("row 3") != std::string::npos);
  }
  SUBCASE("synthetic population: leverage is A / E") {
    const auto records = generate_synthetic({});
    save_balance_sheets(dir / "pop.csv", records);
    const auto r = invoke({"validate", (dir / "pop.csv").string()});
    REQUIRE(r.status == 0);
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "id,equity,leverage,solvent");
    std::size_t k = 0;
    while (std::getline(lines, line)) {
      const auto c1 = line.find(','), c2 = line.find(',', c1 + 1), c3 = line.find(',', c2 + 1);
      const double lev = std::stod(line.substr(c2 + 1, c3 - c2 - 1));
      const auto& b = records.at(k++);
      const double a = b.external_assets + b.interbank_assets;
      const double e = b.external_assets - b.external_liabilities + b.interbank_assets -
                       b.interbank_liabilities;
      CHECK(lev == doctest::Approx(a / e).epsilon(1e-15));
    }
    CHECK(k == records.size());
  }
}

TEST_CASE("sample-network writes a readable matrix") {
  const auto dir = scratch("sample");
  const auto r = invoke({"sample-network", "--synthetic", "n=20", "--seed", "4", "-o",
                      (dir / "m.csv").string()});
  REQUIRE(r.status == 0);
  std::ifstream in(dir / "m.csv");
  std::size_t n = 0;
  const auto m = read_matrix(in, n);
  CHECK(n == 20);
  CHECK(m.size() == 400);
  for (std::size_t i = 0; i < n; ++i) CHECK(m[i * n + i] == 0.0);
}

TEST_CASE("exit status and diagnostics") {
  const auto dir = scratch("status");
  CHECK(invoke({"run", "--synthetic", "n=10", "--set", "max_iterations=2", "-o", dir.string()})
            .status == 2);
  const auto unknown = invoke({"run", "--synthetic", "n=10", "--set", "beta=1", "-o", dir.string()});
  CHECK(unknown.status == 1);
  CHECK_FALSE(unknown.err.empty());
  CHECK(invoke({"run", "-o", dir.string()}).status == 1);  // no input
  CHECK(invoke({"run", "--synthetic", "n=10", "--policy", "nobody", "-o", dir.string()}).status == 1);
  CHECK(invoke({"validate", (dir / "missing.csv").string()}).status == 1);
  CHECK(invoke({"frobnicate"}).status != 0);
  CHECK(invoke({"run", "--synthetic", "n=10", "--input", "x.csv"}).status != 0);
  CHECK(invoke({"--help"}).status == 0);
}

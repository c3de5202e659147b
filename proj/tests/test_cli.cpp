#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "htc/cart.hpp"
#include "htc/cli.hpp"
#include "htc/data.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace htc;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using testutil::slurp;
using testutil::TempDir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> data_lines(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  return lines;
}

std::size_t count_lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

// Writes a depth-limited one-entry DTR grid and returns its path.
std::string stump_grid(const TempDir& dir, std::size_t depth) {
  TreeParams p;
  p.max_depth = depth;
  const json g{{"dtr", json::array({to_json(p)})}};
  const fs::path path = dir / "grid.json";
  testutil::write_file(path, g.dump());
  return path.string();
}

std::string synth(const TempDir& dir, std::size_t n, const std::string& noise = "0.05") {
  const std::string data = (dir / "data.csv").string();
  REQUIRE(run({"synth", "--n", std::to_string(n), "--noise", noise, "--seed", "3", "--out", data}).code == 0);
  return data;
}

}  // namespace

TEST_CASE("synth and validate") {
  TempDir dir;
  const std::string data = synth(dir, 100);
  CHECK(count_lines(slurp(data)) == 101);

  const auto v = run({"validate", "--data", data});
  CHECK(v.code == cli::kExitOk);
  CHECK(v.out.find("n_rows: 100") != std::string::npos);
  CHECK(v.out.find("warnings: 0") != std::string::npos);

  const std::string twin = (dir / "twin.csv").string();
  REQUIRE(run({"synth", "--n", "100", "--noise", "0.05", "--seed", "3", "--out", twin}).code == 0);
  CHECK(slurp(twin) == slurp(data));

  REQUIRE(run({"synth", "--n", "500", "--out", dir.path().string()}).code == 0);
  CHECK(count_lines(slurp(dir / "synthetic.csv")) == 501);
  CHECK(run({"validate", "--data", (dir / "synthetic.csv").string()}).out.find("n_rows: 500") != std::string::npos);
}

TEST_CASE("validate reports input errors and warnings") {
  TempDir dir;
  const fs::path empty = dir / "empty.csv";
  testutil::write_file(empty, testutil::header() + "\n");
  const auto e = run({"validate", "--data", empty.string()});
  CHECK(e.code == cli::kExitInput);
  CHECK(e.err.find("EmptyDataset") != std::string::npos);

  const fs::path warm = dir / "warm.csv";
  testutil::write_file(warm, testutil::header() + "\n" + testutil::row(400) + "\n" + testutil::row(90) + "\n" +
                                 testutil::row(380) + "\n" + testutil::row(200) + "\n");
  const auto w = run({"validate", "--data", warm.string()});
  CHECK(w.code == cli::kExitOk);
  CHECK(w.out.find("warnings: 3") != std::string::npos);

  CHECK(run({"validate", "--data", (dir / "missing.csv").string()}).code == cli::kExitInput);
  CHECK(run({"validate"}).code == cli::kExitInput);
  CHECK(run({"frobnicate"}).code == cli::kExitInput);
  CHECK(run({"train", "--data", warm.string(), "--model", "forest"}).code == cli::kExitInput);
}

TEST_CASE("stats artifacts") {
  TempDir dir;
  const std::string data = synth(dir, 120);
  const std::string out = (dir / "stats").string();
  REQUIRE(run({"stats", "--data", data, "--out", out}).code == 0);

  const auto corr = data_lines(fs::path(out) / "correlation_matrix.csv");
  REQUIRE(corr.size() == kColumnCount + 1);
  CHECK(slurp(fs::path(out) / "correlation_matrix.csv").rfind("# schema_version=", 0) == 0);
  const json cj = json::parse(slurp(fs::path(out) / "correlation_matrix.json"));
  CHECK(cj.at("seed") == 42);
  for (std::size_t i = 0; i < kColumnCount; ++i) CHECK(cj.at("values")[i][i].get<double>() == doctest::Approx(1.0));

  const json f = json::parse(slurp(fs::path(out) / "factors.json"));
  CHECK(f.at("cumulative_fraction").back().get<double>() == doctest::Approx(1.0).epsilon(1e-10));

  const auto vk = data_lines(fs::path(out) / "van_krevelen.csv");
  CHECK(vk[0] == "row,biomass_h_c,biomass_o_c,hydrochar_h_c,hydrochar_o_c");
  CHECK(vk.size() == 121);
}

TEST_CASE("van Krevelen without hydrochar ultimate analysis") {
  TempDir dir;
  const fs::path data = dir / "d.csv";
  std::string text = testutil::header() + "\n";
  for (int i = 0; i < 6; ++i) text += testutil::row(180 + 10 * i, 44 + i, std::to_string(60 + i) + ",20,50,30,6,,,,,") + "\n";
  testutil::write_file(data, text);
  REQUIRE(run({"stats", "--data", data.string(), "--out", (dir / "o").string()}).code == 0);
  const auto vk = data_lines(dir / "o" / "van_krevelen.csv");
  CHECK(vk[0] == "row,biomass_h_c,biomass_o_c");
  CHECK(vk.size() == 7);
}

TEST_CASE("train, evaluate, explain and optimize") {
  TempDir dir;
  const std::string data = synth(dir, 120);
  const std::string out = (dir / "run").string();
  const std::string grid = stump_grid(dir, 1);

  const auto tr = run({"train", "--data", data, "--out", out, "--model", "dtr", "--grid", grid});
  REQUIRE_MESSAGE(tr.code == 0, tr.err);
  std::size_t model_files = 0;
  for (const auto& e : fs::directory_iterator(fs::path(out) / "models")) model_files += e.path().extension() == ".json";
  CHECK(model_files == kTargetCount);
  const std::string report = slurp(fs::path(out) / "report.json");
  const json rj = json::parse(report);
  CHECK(rj.contains("dtr"));
  CHECK_FALSE(rj.contains("svr"));
  CHECK(rj.at("dtr").at("hc_yield").at("params").at("max_depth") == 1);
  CHECK(fs::exists(fs::path(out) / "bounds.json"));

  REQUIRE(run({"train", "--data", data, "--out", out, "--model", "dtr", "--grid", grid}).code == 0);
  CHECK(slurp(fs::path(out) / "report.json") == report);

  const auto ev = run({"evaluate", "--data", data, "--out", out, "--model", "dtr"});
  CHECK_MESSAGE(ev.code == 0, ev.err);
  CHECK(fs::exists(fs::path(out) / "evaluation.json"));

  const auto ex = run({"explain", "--data", data, "--out", out, "--model", "dtr", "--target", "hc_yield", "--rows", "15",
                       "--background", "10"});
  REQUIRE_MESSAGE(ex.code == 0, ex.err);
  const fs::path edir = fs::path(out) / "explain" / "dtr_hc_yield";
  for (const char* f : {"beeswarm.csv", "bar.csv", "heatmap.csv", "importance.svg"}) CHECK(fs::exists(edir / f));
  const auto bar = data_lines(edir / "bar.csv");
  REQUIRE(bar.size() == kFeatureCount + 1);
  // A depth-1 yield tree splits on temperature only, so water content gets nothing.
  CHECK(bar.back() == "water_wt,0");
  CHECK(data_lines(edir / "beeswarm.csv").size() == 15 * kFeatureCount + 1);

  const auto opt = [&](const std::string& app) {
    const auto r = run({"optimize", "--out", out, "--model", "dtr", "--application", app, "--population", "60",
                        "--generations", "10"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return json::parse(slurp(fs::path(out) / "optimum.json"));
  };
  const json energy = opt("energy");
  const json bounds = json::parse(slurp(fs::path(out) / "bounds.json")).at("bounds");
  REQUIRE(energy.at("optimum_inputs").size() == kFeatureCount);
  for (const auto& [k, v] : energy.at("optimum_inputs").items()) {
    CHECK(v.get<double>() >= bounds.at(k)[0].get<double>());
    CHECK(v.get<double>() <= bounds.at(k)[1].get<double>());
  }
  CHECK(opt("energy").dump() == energy.dump());
  CHECK(opt("soil").at("directions") != opt("adsorption").at("directions"));

  CHECK(run({"explain", "--out", out, "--model", "dtr", "--target", "hc_bogus", "--data", data}).code == cli::kExitInput);
}

TEST_CASE("explain without trained models is an input error") {
  TempDir dir;
  const std::string data = synth(dir, 60);
  const auto r = run({"explain", "--data", data, "--out", (dir / "none").string(), "--target", "hc_yield"});
  CHECK(r.code == cli::kExitInput);
}

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "cli_app.hpp"

using namespace macrobell;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(MACROBELL_DATA_DIR) + "/" + name; }

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / ("macrobell_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string* header = nullptr) {
  std::stringstream ss(text);
  std::string line;
  std::getline(ss, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("cli dist writes a normalized PMF") {
  const auto r = run_cli({"dist", "--state", "w", "--N", "400", "--povm", data("sx.json"), "--alpha", "0.5"});
  REQUIRE(r.code == 0);
  std::string header;
  const auto rows = parse_csv(r.out, &header);
  CHECK(header == "x,prob");
  double total = 0.0;
  for (const auto& row : rows) total += row.at(1);
  CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cli chsh --optimize reproduces the reference violation") {
  const auto r = run_cli({"chsh", "--coeffs", "reference", "--optimize"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(std::abs(j.at("value").get<double>() - 2.0 * std::sqrt(10.0) / kPi) <= 1e-6);
  CHECK(j.at("angles").contains("a_prime"));
  CHECK(j.at("correlators").size() == 4);

  const auto fixed = run_cli({"chsh", "--coeffs", "reference", "--angles", "[0, 1.5707963267948966, -0.7853981633974483, 0.7853981633974483]"});
  REQUIRE(fixed.code == 0);
  CHECK(std::abs(json::parse(fixed.out).at("value").get<double>() - 2.0 * std::sqrt(10.0) / kPi) <= 1e-9);
}

TEST_CASE("cli local-model reports a negligible discrepancy") {
  const auto r = run_cli({"local-model", "--coeffs", "random", "--seed", "7"});
  REQUIRE(r.code == 0);
  const auto summary = json::parse(r.err);
  CHECK(summary.at("total_variation").get<double>() <= 1e-8);
  std::string header;
  const auto rows = parse_csv(r.out, &header);
  CHECK(header == "theta_a,theta_b,quantum,lhv");
  CHECK(rows.size() == 201u * 201u);
}

TEST_CASE("cli limit, channel and noise-sweep") {
  const auto lim = run_cli({"limit", "--coeffs", "[0, 1]", "--povm", data("sx.json")});
  REQUIRE(lim.code == 0);
  std::string header;
  CHECK(parse_csv(lim.out, &header).size() == 4001u);
  CHECK(header == "x,density");

  const auto rot = run_cli({"limit", "--coeffs", "[1]", "--alpha", "1", "--points", "101"});
  REQUIRE(rot.code == 0);
  const auto rows = parse_csv(rot.out, &header);
  CHECK(header == "theta,density");
  CHECK(rows.at(50).at(1) == Catch::Approx(1.0 / kPi));

  const auto ch = run_cli({"channel", "--povm", data("sx.json"), "--depol", "0.3"});
  REQUIRE(ch.code == 0);
  CHECK(json::parse(ch.out).at("s2").get<double>() == Catch::Approx(1.0 / 0.49 - 1.0).epsilon(1e-12));

  const auto sw = run_cli({"noise-sweep", "--coeffs", "reference", "--s-grid", "0:0.5:3", "--eps-grid", "0,0.2"});
  REQUIRE(sw.code == 0);
  const auto cells = parse_csv(sw.out, &header);
  CHECK(header == "s,eps,chsh");
  REQUIRE(cells.size() == 6u);
  CHECK(std::abs(cells[0][2] - 2.0 * std::sqrt(10.0) / kPi) <= 1e-9);
}

TEST_CASE("cli sample writes CSV plus sidecar, independent of --threads") {
  const auto dir = scratch_dir();
  const auto a = (dir / "a.csv").string();
  const auto b = (dir / "b.csv").string();
  const std::vector<std::string> base{"sample", "--state", "w", "--N", "200", "--povm", data("sx.json"), "--samples", "300", "--seed", "11"};
  auto args_a = base;
  args_a.insert(args_a.end(), {"--out", a, "--threads", "1"});
  auto args_b = base;
  args_b.insert(args_b.end(), {"--out", b, "--threads", "3"});
  REQUIRE(run_cli(args_a).code == 0);
  REQUIRE(run_cli(args_b).code == 0);
  CHECK(slurp(a) == slurp(b));
  const auto side = json::parse(slurp(a + ".json"));
  CHECK(side.at("seed") == 11);
  CHECK(side.at("N") == 200);
  CHECK(side.at("n_samples") == 300);
  CHECK(parse_csv(slurp(a)).size() == 300u);
  CHECK(!fs::exists(a + ".tmp"));
  fs::remove_all(dir);
}

TEST_CASE("cli converge --exact decreases") {
  const auto r = run_cli({"converge", "--state", "dicke:2", "--povm", data("sx.json"), "--N-list", "50,100,200,400", "--exact"});
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 4u);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][1] < rows[i - 1][1]);
}

TEST_CASE("cli --config supplies options; explicit flags win") {
  const auto dir = scratch_dir();
  const auto cfg = (dir / "cfg.json").string();
  std::ofstream(cfg) << R"({"state": "product", "N": 10, "povm": ")" << data("sx.json") << R"("})";
  const auto r = run_cli({"dist", "--config", cfg});
  REQUIRE(r.code == 0);
  CHECK(parse_csv(r.out).size() == 11u);
  const auto over = run_cli({"dist", "--config", cfg, "--N", "20"});
  REQUIRE(over.code == 0);
  CHECK(parse_csv(over.out).size() == 21u);

  std::ofstream(cfg) << R"({"state": "product", "N": 10, "bogus": 1, "povm": ")" << data("sx.json") << R"("})";
  CHECK(run_cli({"dist", "--config", cfg}).code == 1);
  fs::remove_all(dir);
}

TEST_CASE("cli error contract") {
  const auto dir = scratch_dir();
  const auto bad = (dir / "bad.json").string();
  std::ofstream(bad) << R"({"outcomes": [1, -1], "effects": [[[[1,0],[0,0]],[[0,0],[1,0]]], [[[1,0],[0,0]],[[0,0],[1,0]]]]})";
  const auto v = run_cli({"dist", "--state", "w", "--N", "10", "--povm", bad});
  CHECK(v.code == 1);
  const auto ej = json::parse(v.err);
  CHECK(ej.at("error") == "NotComplete");
  CHECK(ej.at("exit_code") == 1);

  const auto neg = (dir / "neg.json").string();
  std::ofstream(neg) << R"({"outcomes": [1, -1], "effects": [[[[1.5,0],[0,0]],[[0,0],[0,0]]], [[[-0.5,0],[0,0]],[[0,0],[1,0]]]]})";
  const auto n = run_cli({"dist", "--state", "w", "--N", "10", "--povm", neg});
  CHECK(n.code == 1);
  CHECK(json::parse(n.err).at("index") == 1);

  const auto div = run_cli({"channel", "--povm", data("sx.json"), "--loss-p", "1e-5"});
  CHECK(div.code == 2);
  CHECK(json::parse(div.err).at("error") == "Divergent");

  CHECK(run_cli({"dist", "--state", "w", "--N", "10", "--povm", (dir / "missing.json").string()}).code == 1);
  CHECK(run_cli({"dist", "--bogus"}).code == 1);
  CHECK(run_cli({"chsh", "--angles", "[1, 2]"}).code == 1);
  CHECK(run_cli({"--help"}).code == 0);
  fs::remove_all(dir);
}

TEST_CASE("cli selftest passes") {
  CHECK(run_cli({"--selftest"}).code == 0);
  const auto r = run_cli({"selftest"});
  CHECK(r.code == 0);
  CHECK(json::parse(r.out).at("passed") == true);
}

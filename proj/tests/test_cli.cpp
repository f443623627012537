#include <unistd.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "qhjlab/cli/app.hpp"
#include "qhjlab/cli/config.hpp"
#include "qhjlab/cli/output.hpp"
#include "qhjlab/error.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace qhjlab;
using namespace qhjlab::cli;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "qhjlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto p = fs::temp_directory_path() / ("qhjlab_cli_" + tag + "_" + std::to_string(::getpid()) + "_" +
                                              std::to_string(counter++));
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

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::vector<std::string> header(const fs::path& csv) {
  std::istringstream in(slurp(csv).substr(0, slurp(csv).find('\n')));
  std::vector<std::string> cols;
  for (std::string c; std::getline(in, c, ',');) cols.push_back(c);
  return cols;
}

const fs::path kConfigs = QHJLAB_CONFIG_DIR;
const fs::path kGolden = QHJLAB_GOLDEN_DIR;

const char* kSmall = R"({
  "schema": "qhjlab.config/1",
  "name": "small",
  "potential": {"kind": "free"},
  "energy": 1.0,
  "grid": {"x_min": -2.0, "x_max": 2.0, "n": 129},
  "microstate": {"alpha": 0.0, "ell1": 1.0, "ell2": 0.0}
})";

}  // namespace

TEST_CASE("cli: outputs match the golden schema for every shipped config") {
  for (const char* name : {"free_particle", "harmonic_ground_state", "airy"}) {
    CAPTURE(name);
    const auto dir = scratch(name);
    const auto r = run({"all", "--config", (kConfigs / (std::string(name) + ".json")).string(), "--out", dir.string()});
    CHECK(r.code == kExitOk);
    const auto golden = json::parse(slurp(kGolden / (std::string(name) + ".json")));
    const auto report = json::parse(slurp(dir / "report.json"));

    std::vector<std::string> keys;
    for (const auto& [k, v] : report.items()) keys.push_back(k);
    CHECK(keys == golden.at("report_keys").get<std::vector<std::string>>());
    CHECK(report.at("schema") == kReportSchema);
    CHECK(report.at("config") == name);
    CHECK(report.at("summary").at("failed") == 0);

    std::vector<std::string> checks;
    for (const auto& [k, v] : report.at("checks").items()) {
      checks.push_back(k);
      std::vector<std::string> ck;
      for (const auto& [kk, vv] : v.items()) ck.push_back(kk);
      CHECK(ck == golden.at("check_keys").get<std::vector<std::string>>());
    }
    CHECK(checks == golden.at("checks").get<std::vector<std::string>>());

    for (const auto& [file, cols] : golden.at("csv_headers").items()) {
      CAPTURE(file);
      REQUIRE(fs::exists(dir / file));
      CHECK(header(dir / file) == cols.get<std::vector<std::string>>());
      CHECK(report.at("tables").at(file).at("columns") == cols);
    }
    CHECK(fs::exists(dir / "plots.gp") == golden.at("plots").get<bool>());
    fs::remove_all(dir);
  }
}

TEST_CASE("cli: invalid parameters exit 1 with a located diagnostic and write nothing") {
  const auto dir = scratch("ell1");
  std::string text = kSmall;
  text.replace(text.find("\"ell1\": 1.0"), 11, "\"ell1\": 0.0");
  spit(dir / "bad.json", text);
  const auto out = dir / "out";
  const auto r = run({"microstate", "--config", (dir / "bad.json").string(), "--out", out.string()});
  CHECK(r.code == kExitError);
  CHECK(r.err.find("bad.json:7: /microstate/ell1") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
  fs::remove_all(dir);
}

TEST_CASE("cli: config diagnostics") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text, ".", "c.json");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::parameter);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  std::string text = kSmall;

  SUBCASE("unknown key") {
    text.replace(text.find("\"n\": 129"), 8, "\"n\": 129, \"nn\": 3");
    CHECK(message(text).find("c.json:6: /grid/nn") != std::string::npos);
  }
  SUBCASE("grid below the minimum") {
    text.replace(text.find("\"n\": 129"), 8, "\"n\": 16");
    CHECK(message(text).find("c.json:6: /grid/n") != std::string::npos);
  }
  SUBCASE("wrong schema") {
    text.replace(text.find("config/1"), 8, "config/9");
    CHECK(message(text).find("c.json:2: /schema") != std::string::npos);
  }
  SUBCASE("unknown potential kind") {
    text.replace(text.find("\"free\""), 6, "\"square\"");
    CHECK(message(text).find("/potential/kind") != std::string::npos);
  }
  SUBCASE("malformed JSON") { CHECK(message("{\"schema\": ").find("c.json: ") != std::string::npos); }
  SUBCASE("unknown tolerance name") {
    text.replace(text.rfind('}'), 1, ", \"tolerances\": {\"qshjee\": 1e-3}}");
    CHECK(message(text).find("/tolerances/qshjee") != std::string::npos);
  }
}

TEST_CASE("cli: locate_line follows JSON pointers") {
  const std::string text = "{\n  \"a\": {\n    \"b\": [1,\n      2]\n  },\n  \"c/d\": 3\n}\n";
  CHECK(locate_line(text, "") == 1);
  CHECK(locate_line(text, "/a") == 2);
  CHECK(locate_line(text, "/a/b") == 3);
  CHECK(locate_line(text, "/a/b/1") == 4);
  CHECK(locate_line(text, "/c~1d") == 6);
  CHECK(locate_line(text, "/missing") == 0);
}

TEST_CASE("cli: reruns are byte-identical") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto cfg = (kConfigs / "airy.json").string();
  REQUIRE(run({"all", "--config", cfg, "--out", a.string()}).code == kExitOk);
  REQUIRE(run({"all", "--config", cfg, "--out", b.string()}).code == kExitOk);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    CAPTURE(e.path().filename().string());
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
    ++compared;
  }
  CHECK(compared == 5);
  for (const auto& e : fs::directory_iterator(a)) CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("cli: tolerance overrides, forced failure and the report subcommand") {
  const auto dir = scratch("tol");
  spit(dir / "small.json", kSmall);
  const auto cfg = (dir / "small.json").string(), out = (dir / "o").string();

  auto r = run({"microstate", "--config", cfg, "--out", out, "--tol", "qshje=1e-30"});
  CHECK(r.code == kExitCheckFailed);
  CHECK(r.out.find("[FAIL] qshje") != std::string::npos);
  CHECK(r.err.find("check failed: qshje") != std::string::npos);
  auto report = json::parse(slurp(fs::path(out) / "report.json"));
  CHECK(report.at("checks").at("qshje").at("status") == "fail");
  CHECK(report.at("checks").at("qshje").at("tolerance") == 1e-30);
  CHECK(report.at("summary").at("failed") == 1);

  r = run({"report", "--config", cfg, "--out", out});
  CHECK(r.code == kExitCheckFailed);
  CHECK(r.out.find("small (microstate)") != std::string::npos);
  CHECK(r.out.find("[FAIL] qshje") != std::string::npos);

  r = run({"microstate", "--config", cfg, "--out", out, "--tol", "qshje=1e-3"});
  CHECK(r.code == kExitOk);
  report = json::parse(slurp(fs::path(out) / "report.json"));
  CHECK(report.at("checks").at("qshje").at("tolerance") == 1e-3);
  CHECK(run({"report", "--config", cfg, "--out", out}).code == kExitOk);

  CHECK(run({"microstate", "--config", cfg, "--out", out, "--tol", "nope=1"}).code == kExitError);
  CHECK(run({"microstate", "--config", cfg, "--out", out, "--tol", "qshje=-1"}).code == kExitError);
  CHECK(run({"microstate", "--config", cfg, "--out", out, "--tol", "qshje"}).code == kExitError);
  fs::remove_all(dir);
}

TEST_CASE("cli: subcommands select pipelines") {
  const auto dir = scratch("sub");
  spit(dir / "small.json", kSmall);
  const auto cfg = (dir / "small.json").string();

  SUBCASE("all runs only the configured sections") {
    REQUIRE(run({"all", "--config", cfg, "--out", (dir / "all").string()}).code == kExitOk);
    CHECK(fs::exists(dir / "all" / "trajectory.csv"));
    CHECK_FALSE(fs::exists(dir / "all" / "hierarchy.csv"));
    CHECK_FALSE(fs::exists(dir / "all" / "uncertainty.csv"));
  }
  SUBCASE("solve") {
    REQUIRE(run({"solve", "--config", cfg, "--out", (dir / "solve").string()}).code == kExitOk);
    const auto report = json::parse(slurp(dir / "solve" / "report.json"));
    std::set<std::string> names;
    for (const auto& [k, v] : report.at("checks").items()) names.insert(k);
    CHECK(names == std::set<std::string>{"schrodinger", "wronskian"});
  }
  SUBCASE("explicit subcommand without a section uses defaults") {
    REQUIRE(run({"hierarchy", "--config", cfg, "--out", (dir / "h").string()}).code == kExitOk);
    CHECK(fs::exists(dir / "h" / "hierarchy.csv"));
  }
  SUBCASE("usage errors") {
    CHECK(run({}).code == kExitError);
    CHECK(run({"solve"}).code == kExitError);
    CHECK(run({"bogus", "--config", cfg}).code == kExitError);
    CHECK(run({"solve", "--config", (dir / "missing.json").string()}).code == kExitError);
    CHECK(run({"report", "--config", cfg, "--out", (dir / "nothing").string()}).code == kExitError);
  }
  SUBCASE("thread variable is validated") {
    ::setenv("QHJLAB_THREADS", "lots", 1);
    CHECK(run({"solve", "--config", cfg, "--out", (dir / "t").string()}).code == kExitError);
    ::setenv("QHJLAB_THREADS", "2", 1);
    CHECK(run({"solve", "--config", cfg, "--out", (dir / "t").string()}).code == kExitOk);
    ::unsetenv("QHJLAB_THREADS");
  }
  fs::remove_all(dir);
}

TEST_CASE("cli: csv and report formatting") {
  Table t{"x.csv", {}};
  t.add("a", {0.1, -2.0});
  t.add("b", {1e-300, 3.0});
  CHECK(format_csv(t) == "a,b\n0.10000000000000001,1e-300\n-2,3\n");

  RunResult r;
  r.config_name = "c";
  r.subcommand = Subcommand::solve;
  r.checks.push_back({"qshje", false, std::numeric_limits<double>::infinity(), 1e-6, {"fields.csv"}});
  r.checks.push_back({"wronskian", true, 0.0, 1e-8, {}});
  const auto doc = json::parse(render_report(r));
  CHECK(doc.at("checks").at("qshje").at("max_residual") == "inf");
  CHECK(doc.at("summary").at("passed") == 1);
  CHECK(doc.at("summary").at("failed") == 1);

  const auto dir = scratch("fmt");
  write_outputs(r, dir, false);
  const auto back = read_report(dir / "report.json");
  REQUIRE(back.checks.size() == 2);
  CHECK(back.checks[0].name == "qshje");
  CHECK(std::isinf(back.checks[0].max_residual));
  CHECK_FALSE(back.checks[0].pass);
  CHECK(back.checks[1].pass);
  fs::remove_all(dir);
}

#include "qhjlab/cli/app.hpp"

#include <cstdlib>
#include <iomanip>
#include <ostream>

#include "CLI11.hpp"
#include "qhjlab/cli/output.hpp"

namespace qhjlab::cli {

namespace {

unsigned threads_from_env() {
  const char* v = std::getenv("QHJLAB_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 0 || n > 4096) throw Error(ErrorKind::parameter, "QHJLAB_THREADS must be an integer in [0, 4096]");
  return static_cast<unsigned>(n);
}

std::map<std::string, double> parse_overrides(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::parameter, "--tol expects key=value, got \"" + item + "\"");
    const std::string key = item.substr(0, eq);
    if (!is_known_check(key)) throw Error(ErrorKind::parameter, "--tol: unknown check \"" + key + "\"");
    char* end = nullptr;
    const std::string val = item.substr(eq + 1);
    const double v = std::strtod(val.c_str(), &end);
    if (val.empty() || *end != '\0' || !(v > 0.0) || !std::isfinite(v))
      throw Error(ErrorKind::parameter, "--tol " + key + ": tolerance must be a positive number");
    out[key] = v;
  }
  return out;
}

void print_checks(std::ostream& out, const std::vector<CheckResult>& checks) {
  for (const auto& c : checks)
    out << (c.pass ? "[PASS] " : "[FAIL] ") << std::left << std::setw(22) << c.name << " max=" << std::setprecision(3)
        << std::scientific << c.max_residual << " tol=" << c.tolerance << std::defaultfloat << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trajectory-representation quantum mechanics checks", "qhjlab"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  std::vector<std::string> tols;
  for (const char* name : {"solve", "microstate", "uncertainty", "duality", "hierarchy", "all", "report"}) {
    auto* sub = app.add_subcommand(name, std::string(name) == "report" ? "summarize an existing report.json"
                                                                         : std::string("run the ") + name + " checks");
    sub->add_option("--config", config_path, "scenario config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (default from the config)");
    if (std::string(name) != "report") sub->add_option("--tol", tols, "tolerance override key=value")->take_all();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
  }
  const auto sub = parse_subcommand(app.get_subcommands().front()->get_name());

  try {
    const auto cfg = load_config(config_path);
    const std::filesystem::path dir = out_dir.empty() ? cfg.outputs.directory : std::filesystem::path(out_dir);
    if (*sub == Subcommand::report) {
      const auto rep = read_report(dir / "report.json");
      out << rep.config << " (" << rep.subcommand << ")\n";
      print_checks(out, rep.checks);
      const bool ok = std::all_of(rep.checks.begin(), rep.checks.end(), [](const CheckResult& c) { return c.pass; });
      return ok ? kExitOk : kExitCheckFailed;
    }
    const auto overrides = parse_overrides(tols);
    const auto result = run_pipelines(cfg, *sub, overrides, threads_from_env());
    write_outputs(result, dir, cfg.outputs.plot);
    out << result.config_name << " (" << to_string(result.subcommand) << ") -> " << dir.string() << "\n";
    print_checks(out, result.checks);
    for (const auto& w : result.warnings) out << "warning: " << w << "\n";
    if (!result.all_passed()) {
      for (const auto& c : result.checks)
        if (!c.pass) err << "check failed: " << c.name << " (max residual " << c.max_residual << " > " << c.tolerance << ")\n";
      return kExitCheckFailed;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "qhjlab: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace qhjlab::cli

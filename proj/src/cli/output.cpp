#include "qhjlab/cli/output.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "json.hpp"

#ifdef __unix__
#include <unistd.h>
#endif

namespace qhjlab::cli {

namespace {

using json = nlohmann::json;

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no inf/nan; a failing residual can be either.
json json_number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

double from_json_number(const json& v) {
  if (v.is_number()) return v.get<double>();
  const auto s = v.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string format_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c].first;
  }
  out += '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out += ',';
      out += number(table.columns[c].second[r]);
    }
    out += '\n';
  }
  return out;
}

std::string render_report(const RunResult& result) {
  json checks = json::object();
  std::size_t failed = 0;
  for (const auto& c : result.checks) {
    checks[c.name] = {{"status", c.pass ? "pass" : "fail"},
                      {"max_residual", json_number(c.max_residual)},
                      {"tolerance", c.tolerance},
                      {"artifacts", c.artifacts}};
    failed += c.pass ? 0 : 1;
  }
  json tables = json::object();
  for (const auto& t : result.tables) {
    std::vector<std::string> cols;
    for (const auto& [name, v] : t.columns) cols.push_back(name);
    tables[t.file] = {{"columns", cols}, {"rows", t.rows()}};
  }
  const json doc = {{"schema", kReportSchema},
                    {"config", result.config_name},
                    {"subcommand", to_string(result.subcommand)},
                    {"checks", checks},
                    {"tables", tables},
                    {"warnings", result.warnings},
                    {"summary", {{"passed", result.checks.size() - failed}, {"failed", failed}}}};
  return doc.dump(2) + "\n";
}

std::string gnuplot_script(const RunResult& result) {
  std::ostringstream gp;
  gp << "set datafile separator ','\nset key autotitle columnhead\nset grid\n";
  for (const auto& t : result.tables) {
    if (t.columns.size() < 2) continue;
    gp << "\n# " << t.file << "\n";
    const std::size_t xcol = t.file == "uncertainty.csv" || t.file == "trajectory.csv" ? 2 : 1;
    if (t.file == "uncertainty.csv") gp << "set logscale xy\n";
    gp << "plot ";
    bool first = true;
    for (std::size_t c = 1; c <= t.columns.size(); ++c) {
      if (c == xcol || (t.file == "trajectory.csv" && c == 1)) continue;
      gp << (first ? "" : ", \\\n     ") << "'" << t.file << "' using " << xcol << ":" << c << " with lines";
      first = false;
    }
    gp << "\npause -1\n";
    if (t.file == "uncertainty.csv") gp << "unset logscale\n";
  }
  return gp.str();
}

void atomic_write(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
#ifdef __unix__
  tmp += ".tmp." + std::to_string(::getpid());
#else
  tmp += ".tmp";
#endif
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::parameter, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorKind::parameter, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorKind::parameter, "cannot rename into " + path.string() + ": " + ec.message());
  }
}

std::vector<std::filesystem::path> write_outputs(const RunResult& result, const std::filesystem::path& dir, bool plot) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::parameter, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& t : result.tables) {
    atomic_write(dir / t.file, format_csv(t));
    written.push_back(dir / t.file);
  }
  if (plot) {
    atomic_write(dir / "plots.gp", gnuplot_script(result));
    written.push_back(dir / "plots.gp");
  }
  atomic_write(dir / "report.json", render_report(result));
  written.push_back(dir / "report.json");
  return written;
}

ReportSummary read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::parameter, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
    if (doc.at("schema").get<std::string>() != kReportSchema)
      throw Error(ErrorKind::parameter, path.string() + ": unsupported report schema");
    ReportSummary s{doc.at("config").get<std::string>(), doc.at("subcommand").get<std::string>(), {}};
    for (const auto& [name, c] : doc.at("checks").items())
      s.checks.push_back({name, c.at("status").get<std::string>() == "pass", from_json_number(c.at("max_residual")),
                          c.at("tolerance").get<double>(), c.at("artifacts").get<std::vector<std::string>>()});
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parameter, path.string() + ": " + e.what());
  }
}

}  // namespace qhjlab::cli

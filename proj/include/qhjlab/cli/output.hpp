#pragma once

// Artifacts of a run: CSV tables, the JSON report (schema "qhjlab.report/1")
// and an optional gnuplot script. Every file is written to a temporary name
// and renamed into place.

#include <filesystem>
#include <string>
#include <vector>

#include "qhjlab/cli/pipelines.hpp"

namespace qhjlab::cli {

inline constexpr const char* kReportSchema = "qhjlab.report/1";

/// Header row plus one row per sample, 17 significant digits, LF endings.
std::string format_csv(const Table& table);

std::string render_report(const RunResult& result);

std::string gnuplot_script(const RunResult& result);

void atomic_write(const std::filesystem::path& path, const std::string& contents);

/// Writes report.json, every table and (if requested) plots.gp into dir.
/// Returns the paths written, in order.
std::vector<std::filesystem::path> write_outputs(const RunResult& result, const std::filesystem::path& dir,
                                                 bool plot);

struct ReportSummary {
  std::string config;
  std::string subcommand;
  std::vector<CheckResult> checks;
};

/// Reads a report.json written by write_outputs.
ReportSummary read_report(const std::filesystem::path& path);

}  // namespace qhjlab::cli

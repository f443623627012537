#pragma once

// Runs the solver, microstate, uncertainty, duality and hierarchy pipelines
// for a parsed config and collects named checks and output tables.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qhjlab/cli/config.hpp"

namespace qhjlab::cli {

enum class Subcommand { solve, microstate, uncertainty, duality, hierarchy, all, report };

std::optional<Subcommand> parse_subcommand(std::string_view name);
const char* to_string(Subcommand s) noexcept;

/// Check names accepted in tolerance overrides ("sprime_<k>" for any k).
bool is_known_check(const std::string& name);

struct CheckResult {
  std::string name;
  bool pass;
  double max_residual;
  double tolerance;
  std::vector<std::string> artifacts;
};

/// Column-major table; every column has the same length.
struct Table {
  std::string file;
  std::vector<std::pair<std::string, std::vector<double>>> columns;

  void add(std::string name, std::vector<double> values);
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().second.size(); }
};

struct RunResult {
  std::string config_name;
  Subcommand subcommand;
  std::vector<CheckResult> checks;
  std::vector<Table> tables;
  std::vector<std::string> warnings;

  bool all_passed() const;
};

/// overrides take precedence over the config's tolerance map. threads = 0
/// means hardware concurrency.
RunResult run_pipelines(const ScenarioConfig& config, Subcommand subcommand,
                        const std::map<std::string, double>& overrides = {}, unsigned threads = 0);

}  // namespace qhjlab::cli

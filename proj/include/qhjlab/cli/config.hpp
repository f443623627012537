#pragma once

// Declarative scenario configuration (one JSON document, schema
// "qhjlab.config/1"). Validation errors carry the file line of the offending
// key.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qhjlab/microstates.hpp"
#include "qhjlab/uncertainty.hpp"

namespace qhjlab::cli {

inline constexpr const char* kConfigSchema = "qhjlab.config/1";
inline constexpr std::size_t kMinCliSamples = 64;

struct MicrostateConfig {
  MicrostateParams params;
  std::size_t trajectory_samples = 65;
};

struct UncertaintyConfig {
  double delta_alpha = 1.0;
  std::optional<Interval> window;
  std::vector<double> hbar_scan;  // empty: single evaluation at the scenario hbar
};

struct DualityConfig {
  std::vector<std::array<double, 3>> sprime;  // (a, b, c) triples for the general s' check
};

struct HierarchyConfig {
  int K = 4;
  double epsilon = 0.1;
  std::optional<double> x_ref;
  std::optional<double> energy;        // defaults to the scenario energy
  std::optional<Grid> grid;            // defaults to the scenario grid
  std::vector<RealField> F_even;       // loaded from the referenced CSV files
  std::vector<std::string> F_even_files;
  std::vector<double> epsilon_sweep;   // remainder slope check when >= 2 values
};

struct OutputConfig {
  std::filesystem::path directory;
  bool plot = false;
};

struct ScenarioConfig {
  std::string name;
  Scenario scenario;
  std::optional<MicrostateConfig> microstate;
  std::optional<UncertaintyConfig> uncertainty;
  std::optional<DualityConfig> duality;
  std::optional<HierarchyConfig> hierarchy;
  OutputConfig outputs;
  std::map<std::string, double> tolerances;
};

/// Parses and validates a config document. base_dir resolves relative file
/// references; source names the document in diagnostics.
ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                            const std::string& source = "config");

ScenarioConfig load_config(const std::filesystem::path& path);

/// 1-based line of the value addressed by a JSON pointer ("/grid/n"), or 0
/// when the pointer does not resolve. text must be valid JSON.
std::size_t locate_line(const std::string& text, const std::string& pointer);

}  // namespace qhjlab::cli

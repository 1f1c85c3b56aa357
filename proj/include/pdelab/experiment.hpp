#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pdelab/config.hpp"
#include "pdelab/risk.hpp"

namespace pdelab {

struct PresetInfo {
  std::string name;
  std::string experiment;
  std::string description;
  std::string anchor;
};

/// Built-in presets compiled from presets/*.cfg, sorted by name.
std::vector<PresetInfo> list_presets();
Config load_preset(const std::string& name);

/// Reads either a flat config file or a JSON run summary (its "config" echo).
Config load_config_file(const std::filesystem::path& path);
Config config_from_json_text(const std::string& text, const std::string& source);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  double budget_scale = 1.0;
  unsigned threads = 1;
  /// harmonic, flat, twopoint:m=M (or twopoint:M); replaces prior.kind/prior.m
  std::optional<std::string> prior;
};

struct VerdictLine {
  std::string group;
  Verdict verdict = Verdict::Fail;
  std::string detail;
};

struct RunResult {
  std::string name;
  std::string experiment;
  int exit_code = 0;  ///< 0 ok, 2 when any verdict is FAIL
  std::vector<VerdictLine> verdicts;
  std::vector<std::string> warnings;
  std::filesystem::path csv_path;
  std::filesystem::path json_path;
  std::string csv;
  std::string summary_json;
};

/// Applies the overrides in `opts` (seed, budget scale), runs the experiment
/// and writes <out_dir>/<name>.csv and <out_dir>/<name>.json.
RunResult run_experiment(Config cfg, const std::string& name, const RunOptions& opts);

}  // namespace pdelab

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fimlab/table.hpp"

namespace fimlab {

enum class Scale { desk, paper };

Scale parse_scale(const std::string& s);  // "desk" | "paper"
std::string scale_name(Scale s);

// One run request: which study, desk or paper replication counts, and scalar
// knob overrides. Output is a pure function of everything here except
// `threads`, which only changes the work split.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  Scale scale = Scale::desk;
  int threads = 1;
  std::map<std::string, double> overrides;

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_json_file(const std::string& path);
};

// Schema entry for one override knob. Bounds are inclusive; use infinities
// for unconstrained sides.
struct OverrideSpec {
  std::string key;
  bool integral = false;
  double min_value = 0.0;
  double max_value = 0.0;
  std::string what;
};

struct ExperimentInfo {
  std::string name;
  std::string description;  // one line, names the reproduced reference table
  std::vector<OverrideSpec> overrides;
};

const std::vector<ExperimentInfo>& list_experiments();

// Runs the named study and returns its tables. Paper scale prints a runtime
// warning to stderr before starting. Throws UnknownExperiment and
// InvalidOverride for bad configs, otherwise propagates study errors.
std::vector<ResultTable> run_experiment(const ExperimentConfig& config);

}  // namespace fimlab

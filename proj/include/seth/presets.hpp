#pragma once

// Named experiments. Each preset is an INI scenario shipped in presets/ plus
// a driver that sweeps it and writes CSV tables.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seth/engine.hpp"

namespace seth::presets {

class UnknownPreset : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Options {
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;             // replicates where a preset uses them
  std::vector<std::string> overrides;  // section.key=value
  unsigned threads = 0;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Output {
  std::map<std::string, std::string> files;  // file name -> contents
  std::vector<Check> checks;

  bool passed() const;
};

const std::vector<std::string>& names();
bool exists(const std::string& name);

/// Embedded preset file by file name (e.g. "fig11_trajectory.csv").
std::optional<std::string> resource(const std::string& file);

ScenarioConfig load(const std::string& name, const std::vector<std::string>& overrides = {});

Output run_preset(const std::string& name, const Options& opts = {});

/// A user scenario: frames, trials, energy and sensing tables as recorded.
Output run_config(ScenarioConfig config, const Options& opts = {});

}  // namespace seth::presets

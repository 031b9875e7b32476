#pragma once

// Scenario files are INI text:
//
//   [run]        duration_ns, seed, n_priority, trace_energy, energy_trace_period_ns, replicates
//   [substrate]  length_m, resistance_per_m, v_ref, decay_per_m, threshold_v, noise_sigma,
//                sense_error_prob, frame_loss_prob, burst_min, burst_max
//   [nodes.<id>] position_m, priority, capacitor_f, coordinator, power (external|harvested),
//                harvester (auto|explicit), v_inf, r_s, i_leak, initial_v, v_on, v_off,
//                t_idle_ns, t_turn_ns, t_check_ns, i_off, i_harvest, i_listen, i_tx, i_rx, i_sense
//   [traffic]    kind (none|trigger|release|periodic), start_ns, interval_ns, count, fanout,
//                source, dest, release_nodes, carrier, carrier_start_ns, carrier_end_ns
//   [sensing]    enabled, node, period_ns, start_ns, end_ns, trajectory, dv0, r0, alpha,
//                squeeze_gain, g_floor, k, window_ns, smoothing_ns
//
// Overrides use `section.key=value`, e.g. `nodes.3.priority=4`.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "seth/engine.hpp"

namespace seth::config {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& origin, int line, const std::string& msg)
      : std::runtime_error(origin + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

using ValidationError = ConfigInvalid;

/// Looks up auxiliary files (trajectories) by name; return nullopt if unknown.
using ResourceLoader = std::function<std::optional<std::string>(const std::string&)>;

ScenarioConfig parse_config_text(const std::string& text, const std::string& origin = "<config>",
                                 const std::vector<std::string>& overrides = {},
                                 const ResourceLoader& resources = {});

/// Reads `path`; relative trajectory paths resolve against its directory.
ScenarioConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {});

}  // namespace seth::config

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "seth/energy.hpp"
#include "seth/medium.hpp"
#include "seth/neuron.hpp"
#include "seth/sensing.hpp"

namespace seth {

enum class PowerSource { External, Harvested };

struct NodeSpec {
  NeuronConfig neuron{};
  PowerSource power = PowerSource::External;
  /// When unset, a harvested node uses the calibrated harvester for its
  /// distance from the coordinator.
  std::optional<energy::HarvesterModel> harvester;
  double initial_v = 0.0;
};

enum class TrafficKind { None, Trigger, Release, Periodic };

struct TrafficSpec {
  TrafficKind kind = TrafficKind::None;
  Nanos start = 1ms;
  Nanos interval = 20ms;
  int count = 1;
  int fanout = 1;       // trigger: repliers to the right of the source
  int source = -1;      // trigger/periodic; -1 means the coordinator
  int dest = -1;        // release/periodic
  std::vector<int> release_nodes;
  bool carrier = false; // coordinator radiates a continuous carrier
  Nanos carrier_start{0};
  Nanos carrier_end{0};
};

struct SensingSpec {
  bool enabled = false;
  int node = -1;  // receiver that samples the carrier
  sensing::SensingModel model{};
  sensing::DetectorConfig detector{};
  Nanos period = 1ms;
  Nanos start{0};
  Nanos end{0};
  sensing::IntruderTrajectory trajectory{};
};

struct RunSpec {
  Nanos duration = 1s;
  std::uint64_t seed = 1;
  int n_priority = codec::kDefaultPriorityLevels;
  bool trace_energy = false;
  Nanos energy_trace_period = 1ms;
  int replicates = 1000;
};

class ConfigInvalid : public std::invalid_argument {
 public:
  ConfigInvalid(std::string field, const std::string& why)
      : std::invalid_argument(field + ": " + why), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct ScenarioConfig {
  RunSpec run{};
  medium::SubstrateModel substrate{};
  std::vector<NodeSpec> nodes;
  TrafficSpec traffic{};
  SensingSpec sensing{};

  /// Throws ConfigInvalid naming the offending field.
  void validate() const;
  const NodeSpec* find(int id) const;
  const NodeSpec* coordinator() const;
};

struct FrameRecord {
  Nanos enqueue;
  Nanos deliver;
  int src;
  int dst;
  int priority;
  bool crc_ok;
  bool winner_correct;
};

struct EnergySample {
  Nanos t;
  int node;
  double v_cap;
  Mode mode;
};

struct SenseRecord {
  Nanos t;
  double volts;
};

/// One coordinator trigger and the first reply it gets back.
struct TrialRecord {
  Nanos start{0};
  int contenders = 0;
  int expected_src = -1;  // highest-priority node that decoded the request
  int first_src = -1;     // -1 when nothing came back
  bool crc_ok = false;

  bool communication_ok() const noexcept { return first_src >= 0 && crc_ok; }
  bool contention_ok() const noexcept { return first_src >= 0 && first_src == expected_src; }
  bool joint_ok() const noexcept { return communication_ok() && contention_ok(); }
};

struct Metrics {
  std::vector<FrameRecord> frames;
  std::vector<TrialRecord> trials;
  std::vector<EnergySample> energy;
  std::vector<SenseRecord> sensing;
  std::vector<sensing::Detection> detections;
  std::map<int, Nanos> activations;  // first activation per harvested node

  std::uint64_t enqueued = 0;
  std::uint64_t delivered_ok = 0;
  std::uint64_t delivered_corrupt = 0;
  std::uint64_t pending = 0;
  std::uint64_t deferrals = 0;
  std::uint64_t events = 0;

  /// Per trial when the run has triggers, otherwise per transmitted frame.
  double communication_reliability() const;
  double contention_reliability() const;
  double joint_reliability() const;
  /// Frames decoded with a valid checksum over frames sent.
  double delivery_ratio() const;
};

/// Harvester a node uses: its explicit model, or the calibrated one for its
/// distance from the coordinator.
energy::HarvesterModel resolve_harvester(const ScenarioConfig& config, const NodeSpec& node);

/// Executes one scenario until its duration elapses or nothing is left to do.
Metrics run(const ScenarioConfig& config);

struct Estimate {
  double mean = 0;
  double ci_low = 0;
  double ci_high = 0;
  int samples = 0;
};

struct Aggregate {
  int runs = 0;
  std::map<std::string, Estimate> metrics;
};

/// Seed for replicate k: the base seed for k = 0, derive_seed(base, k) after.
std::uint64_t replicate_seed(std::uint64_t base, int k);

/// Independent runs with split seeds, aggregated as mean +- 1.96 sd / sqrt(n).
/// `threads` = 0 uses the hardware concurrency.
Aggregate replicate(const ScenarioConfig& config, int runs, unsigned threads = 0);

/// Metric values of one run as used by replicate().
std::map<std::string, double> run_statistics(const Metrics& m);

}  // namespace seth

#pragma once

#include <vector>

#include "seth/engine.hpp"

namespace testutil {

inline seth::NodeSpec node(int id, int priority, double pos) {
  seth::NodeSpec n;
  n.neuron.id = id;
  n.neuron.priority = priority;
  n.neuron.position_m = pos;
  return n;
}

// Sink (id 0, receive-only) plus `priorities` released together at 1 ms.
inline seth::ScenarioConfig release(const std::vector<int>& priorities, std::uint64_t seed = 1) {
  seth::ScenarioConfig c;
  c.run.seed = seed;
  c.run.duration = std::chrono::milliseconds(50);
  c.substrate.frame_loss_prob = 0;
  c.substrate.sense_error_prob = 0;
  c.nodes.push_back(node(0, 0, 1.1));
  int id = 1;
  for (int p : priorities) {
    c.nodes.push_back(node(id, p, 0.25 * (p - 1)));
    c.traffic.release_nodes.push_back(id);
    ++id;
  }
  c.traffic.kind = seth::TrafficKind::Release;
  c.traffic.dest = 0;
  c.traffic.start = std::chrono::milliseconds(1);
  return c;
}

}  // namespace testutil

#include <doctest.h>

#include <algorithm>

#include "scenario.hpp"
#include "seth/calibration.hpp"
#include "seth/engine.hpp"
#include "seth/report.hpp"

using namespace seth;

namespace {

ScenarioConfig trigger(int fanout, double eps, std::uint64_t seed) {
  ScenarioConfig c;
  c.run.seed = seed;
  c.run.n_priority = 10;
  c.run.duration = std::chrono::milliseconds(200);
  c.substrate.sense_error_prob = eps;
  auto coord = testutil::node(0, 10, 0.0);
  coord.neuron.coordinator = true;
  c.nodes.push_back(coord);
  for (int i = 1; i <= 9; ++i) c.nodes.push_back(testutil::node(i, 10 - i, i * 0.5 / 9));
  c.traffic.kind = TrafficKind::Trigger;
  c.traffic.fanout = fanout;
  c.traffic.count = 20;
  c.traffic.interval = std::chrono::milliseconds(8);
  return c;
}

}  // namespace

TEST_CASE("same seed gives identical output") {
  const auto cfg = trigger(6, 0.02, 99);
  const Metrics a = run(cfg);
  const Metrics b = run(cfg);
  CHECK(report::frames_csv(a) == report::frames_csv(b));
  CHECK(report::trials_csv(a) == report::trials_csv(b));
  CHECK(a.events == b.events);
}

TEST_CASE("every enqueued frame has exactly one disposition") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Metrics m = run(trigger(9, 0.05, seed));
    CHECK(m.enqueued == m.delivered_ok + m.delivered_corrupt + m.pending);
    CHECK(m.frames.size() == m.delivered_ok + m.delivered_corrupt);
  }
  auto cut = testutil::release({1, 2, 3, 4, 5, 6, 7, 8, 9});
  cut.run.duration = std::chrono::milliseconds(4);
  const Metrics m = run(cut);
  CHECK(m.pending > 0);
  CHECK(m.enqueued == m.delivered_ok + m.delivered_corrupt + m.pending);
}

TEST_CASE("joint reliability never exceeds its components") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Metrics m = run(trigger(8, 0.05, seed));
    REQUIRE_FALSE(m.trials.empty());
    CHECK(m.joint_reliability() <= m.communication_reliability());
    CHECK(m.joint_reliability() <= m.contention_reliability());
    for (const auto& t : m.trials) CHECK(t.joint_ok() == (t.communication_ok() && t.contention_ok()));
  }
}

TEST_CASE("without sense errors triggers are answered by the highest-priority responder") {
  const Metrics m = run(trigger(9, 0.0, 3));
  REQUIRE(m.trials.size() == 20);
  for (const auto& t : m.trials) {
    CHECK(t.expected_src == 1);
    CHECK(t.contention_ok());
  }
}

TEST_CASE("frames never overlap at eps = 0") {
  const Metrics m = run(testutil::release({2, 4, 5, 7, 9}, 17));
  auto frames = m.frames;
  std::sort(frames.begin(), frames.end(), [](const auto& a, const auto& b) { return a.deliver < b.deliver; });
  for (std::size_t i = 1; i < frames.size(); ++i) {
    CHECK(frames[i].deliver - codec::kFrameAirtime >= frames[i - 1].deliver);
  }
}

TEST_CASE("a run with no traffic finishes cleanly") {
  ScenarioConfig c;
  c.nodes.push_back(testutil::node(1, 1, 0.0));
  const Metrics m = run(c);
  CHECK(m.frames.empty());
  CHECK(m.enqueued == 0);
  CHECK(std::isnan(m.delivery_ratio()));
}

TEST_CASE("harvested activation matches the closed form") {
  ScenarioConfig c;
  auto coord = testutil::node(0, 1, 0.0);
  coord.neuron.coordinator = true;
  c.nodes.push_back(coord);
  auto h = testutil::node(1, 0, 0.5);
  h.power = PowerSource::Harvested;
  h.neuron.capacitance = 220e-6;
  c.nodes.push_back(h);
  c.traffic.carrier = true;
  c.traffic.carrier_end = std::chrono::seconds(3);
  c.run.duration = std::chrono::seconds(3);
  c.run.trace_energy = true;
  const Metrics m = run(c);
  REQUIRE(m.activations.count(1));
  const auto model = resolve_harvester(c, c.nodes[1]);
  const auto t = energy::time_to_voltage(model, 220e-6, h.neuron.loads.off, 0.0, 2.0);
  REQUIRE(t);
  CHECK(to_seconds(m.activations.at(1)) == doctest::Approx(*t).epsilon(1e-6));
  CHECK_FALSE(m.energy.empty());
  for (const auto& e : m.energy) CHECK(e.v_cap >= 0.0);
}

TEST_CASE("replicate is independent of thread count") {
  const auto cfg = trigger(5, 0.02, 4);
  const Aggregate one = replicate(cfg, 12, 1);
  const Aggregate many = replicate(cfg, 12, 4);
  REQUIRE(one.metrics.size() == many.metrics.size());
  for (const auto& [k, e] : one.metrics) {
    CHECK(e.mean == many.metrics.at(k).mean);
    CHECK(e.ci_low <= e.mean);
    CHECK(e.mean <= e.ci_high);
  }
  CHECK(replicate_seed(7, 0) == 7);
  CHECK(replicate_seed(7, 1) != replicate_seed(7, 2));
}

TEST_CASE("scenario validation") {
  auto c = testutil::release({3, 3});
  try {
    c.validate();
    FAIL("expected ConfigInvalid");
  } catch (const ConfigInvalid& e) {
    CHECK(e.field() == "priority");
  }
  c = testutil::release({3});
  c.traffic.release_nodes = {0};
  CHECK_THROWS_AS(c.validate(), ConfigInvalid);  // receive-only sink cannot send
  c = testutil::release({3});
  c.nodes[1].neuron.position_m = 2.5;
  CHECK_THROWS_AS(c.validate(), ConfigInvalid);
}

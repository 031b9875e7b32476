#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "scenario.hpp"
#include "seth/neuron.hpp"

using namespace seth;

namespace {

MacEvent ev(MacEventKind k) { return MacEvent{k}; }

MacEvent request() {
  MacEvent e{MacEventKind::TxRequest};
  e.frame.frame = codec::make_frame(3, 1, {});
  return e;
}

bool has(const MacTransition& t, MacAction a) { return std::find(t.actions.begin(), t.actions.end(), a) != t.actions.end(); }

}  // namespace

TEST_CASE("mac walks the four steps") {
  MacState s;
  auto t = mac_transition(s, Mode::Listen, ev(MacEventKind::IdleElapsed));
  CHECK(t.mode == Mode::Listen);
  CHECK(t.actions.empty());

  t = mac_transition(s, Mode::Listen, request());
  CHECK(t.mode == Mode::Listen);
  CHECK(t.state.tx_queue.size() == 1);
  CHECK(has(t, MacAction::WaitForIdle));

  t = mac_transition(t.state, t.mode, ev(MacEventKind::IdleElapsed));
  CHECK(t.mode == Mode::TxPreamble);
  CHECK(has(t, MacAction::EmitPreamble));

  t = mac_transition(t.state, t.mode, ev(MacEventKind::PreambleDone));
  CHECK(t.mode == Mode::ArbCheck);
  CHECK(has(t, MacAction::StartCheck));

  MacEvent idle{MacEventKind::CheckResult};
  idle.check = medium::Busy::Idle;
  t = mac_transition(t.state, t.mode, idle);
  CHECK(t.mode == Mode::TxFrame);
  CHECK(has(t, MacAction::EmitFrame));

  t = mac_transition(t.state, t.mode, ev(MacEventKind::FrameDone));
  CHECK(t.mode == Mode::Listen);
  CHECK(t.state.tx_queue.empty());
  CHECK(t.actions.empty());
}

TEST_CASE("busy check defers and rearms") {
  MacState s;
  s.tx_queue.push_back({});
  MacEvent busy{MacEventKind::CheckResult};
  busy.check = medium::Busy::Busy;
  const auto t = mac_transition(s, Mode::ArbCheck, busy);
  CHECK(t.mode == Mode::Listen);
  CHECK(t.state.deferrals == 1);
  CHECK(t.state.tx_queue.size() == 1);
  CHECK(has(t, MacAction::WaitForIdle));
}

TEST_CASE("brownout keeps the queue and activation harvests") {
  MacState s;
  s.tx_queue.push_back({});
  for (Mode m : {Mode::Harvest, Mode::Listen, Mode::TxPreamble, Mode::ArbCheck, Mode::TxFrame, Mode::RxFrame, Mode::Sense}) {
    const auto t = mac_transition(s, m, ev(MacEventKind::Brownout));
    CHECK(t.mode == Mode::Off);
    CHECK(t.state.tx_queue.size() == 1);
  }
  const auto a = mac_transition(s, Mode::Off, ev(MacEventKind::Activate));
  CHECK(a.mode == Mode::Harvest);
  CHECK(has(a, MacAction::WaitForIdle));
}

TEST_CASE("impossible events are rejected") {
  MacState s;
  CHECK_THROWS_AS(mac_transition(s, Mode::Off, ev(MacEventKind::Brownout)), IllegalTransition);
  CHECK_THROWS_AS(mac_transition(s, Mode::Listen, ev(MacEventKind::Activate)), IllegalTransition);
  CHECK_THROWS_AS(mac_transition(s, Mode::Listen, ev(MacEventKind::PreambleDone)), IllegalTransition);
  CHECK_THROWS_AS(mac_transition(s, Mode::TxFrame, ev(MacEventKind::FrameDone)), IllegalTransition);
  CHECK_THROWS_AS(mac_transition(s, Mode::TxPreamble, ev(MacEventKind::RxStart)), IllegalTransition);
  CHECK_THROWS_AS(mac_transition(s, Mode::Listen, ev(MacEventKind::RxDone)), IllegalTransition);
  CHECK_THROWS_AS(mac_transition(s, Mode::TxFrame, ev(MacEventKind::IdleElapsed)), IllegalTransition);
}

TEST_CASE("carrier and sensing modes") {
  MacState s;
  auto t = mac_transition(s, Mode::Listen, ev(MacEventKind::CarrierStart));
  CHECK(t.mode == Mode::TxFrame);
  CHECK(t.state.carrier);
  CHECK_THROWS_AS(mac_transition(t.state, t.mode, ev(MacEventKind::FrameDone)), IllegalTransition);
  t = mac_transition(t.state, t.mode, ev(MacEventKind::CarrierStop));
  CHECK(t.mode == Mode::Listen);
  t = mac_transition(t.state, Mode::Harvest, ev(MacEventKind::SenseStart));
  CHECK(t.mode == Mode::Sense);
  t = mac_transition(t.state, t.mode, ev(MacEventKind::SenseStop));
  CHECK(t.mode == Mode::Listen);
}

TEST_CASE("antenna exclusivity") {
  int harvesting = 0;
  for (Mode m : {Mode::Off, Mode::Harvest, Mode::Listen, Mode::TxPreamble, Mode::ArbCheck, Mode::TxFrame, Mode::RxFrame,
                 Mode::Sense}) {
    const bool communicates = m != Mode::Off && m != Mode::Harvest;
    CHECK_FALSE((harvests(m) && communicates));
    harvesting += harvests(m);
  }
  CHECK(harvesting == 2);
}

TEST_CASE("hand-traced 3 vs 1 contention") {
  // Both request at t = 0 and start their preambles after T_idle (100 us).
  // Node 1's preamble ends at 120 us; it samples [125, 145) us while node 3's
  // preamble is ON in [120, 130) and defers. Node 3 checks [165, 185) us, finds
  // it idle and finishes its frame at 100 + 60 + 25 + 840 us.
  auto cfg = testutil::release({3, 1});
  cfg.traffic.start = Nanos{0};
  const Metrics m = run(cfg);
  REQUIRE(m.frames.size() == 2);
  CHECK(m.frames[0].src == 1);  // ids: node 1 has priority 3
  CHECK(m.frames[0].priority == 3);
  CHECK(m.frames[0].deliver == Nanos{1025us});
  CHECK(m.frames[0].winner_correct);
  CHECK(m.frames[1].priority == 1);
  CHECK(m.frames[1].deliver > Nanos{1025us} + 100us);
  CHECK(m.deferrals == 1);
}

TEST_CASE("uncontended frame occupies the channel for 20p + 840 us") {
  for (int p = 1; p <= 9; ++p) {
    auto cfg = testutil::release({p});
    cfg.traffic.start = Nanos{0};
    const Metrics m = run(cfg);
    REQUIRE(m.frames.size() == 1);
    CHECK(m.frames[0].deliver == 100us + Nanos{20us} * p + 5us + 20us + 840us);
  }
}

TEST_CASE("every subset of up to five of nine delivers in descending priority") {
  std::vector<int> all(9);
  std::iota(all.begin(), all.end(), 1);
  int scenarios = 0;
  for (unsigned mask = 0; mask < (1u << 9); ++mask) {
    const int k = __builtin_popcount(mask);
    if (k < 2 || k > 5) continue;
    std::vector<int> prios;
    for (int i = 0; i < 9; ++i) {
      if (mask & (1u << i)) prios.push_back(all[static_cast<std::size_t>(i)]);
    }
    const Metrics m = run(testutil::release(prios, mask));
    REQUIRE(m.frames.size() == prios.size());
    for (std::size_t i = 0; i < m.frames.size(); ++i) {
      CHECK(m.frames[i].crc_ok);
      CHECK(m.frames[i].winner_correct);
      if (i > 0) CHECK(m.frames[i].priority < m.frames[i - 1].priority);
    }
    ++scenarios;
  }
  CHECK(scenarios == 36 + 84 + 126 + 126);
}

#include "seth/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <queue>
#include <set>
#include <thread>
#include <unordered_map>

#include "seth/calibration.hpp"

namespace seth {

// ---------------------------------------------------------------------------
// Config validation

const NodeSpec* ScenarioConfig::find(int id) const {
  for (const auto& n : nodes) {
    if (n.neuron.id == id) return &n;
  }
  return nullptr;
}

const NodeSpec* ScenarioConfig::coordinator() const {
  for (const auto& n : nodes) {
    if (n.neuron.coordinator) return &n;
  }
  return nullptr;
}

void ScenarioConfig::validate() const {
  if (run.duration <= Nanos{0}) throw ConfigInvalid("duration_ns", "must be > 0");
  if (run.n_priority < 1) throw ConfigInvalid("n_priority", "must be >= 1");
  if (run.energy_trace_period <= Nanos{0}) throw ConfigInvalid("energy_trace_period_ns", "must be > 0");
  if (run.replicates < 1) throw ConfigInvalid("replicates", "must be >= 1");
  try {
    substrate.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigInvalid(e.what(), "out of range");
  }
  if (nodes.empty()) throw ConfigInvalid("nodes", "at least one node is required");

  std::set<int> ids, priorities;
  int coordinators = 0;
  for (const auto& n : nodes) {
    const auto& c = n.neuron;
    if (c.id < 0 || c.id > 254) throw ConfigInvalid("id", "must be in [0, 254]");
    if (!ids.insert(c.id).second) throw ConfigInvalid("id", "duplicate node id " + std::to_string(c.id));
    if (c.priority < 0 || c.priority > run.n_priority) throw ConfigInvalid("priority", "outside [0, n_priority]");
    if (c.priority > 0 && !priorities.insert(c.priority).second) {
      throw ConfigInvalid("priority", "priority " + std::to_string(c.priority) + " used twice");
    }
    if (c.position_m < 0 || c.position_m > substrate.length_m) throw ConfigInvalid("position_m", "outside substrate");
    if (!(c.capacitance > 0)) throw ConfigInvalid("capacitor_f", "must be > 0");
    if (!(c.v_off < c.v_on)) throw ConfigInvalid("v_off", "must be below v_on");
    const auto& l = c.loads;
    for (double i : {l.off, l.harvest, l.listen, l.tx, l.rx, l.sense}) {
      if (i < 0) throw ConfigInvalid("currents", "must be >= 0");
    }
    if (c.timing.t_idle <= Nanos{0}) throw ConfigInvalid("t_idle_ns", "must be > 0");
    if (c.timing.t_turn < Nanos{0} || c.timing.t_turn >= codec::kCellHalf) {
      throw ConfigInvalid("t_turn_ns", "must be in [0, 10000)");
    }
    if (c.timing.t_check <= Nanos{0}) throw ConfigInvalid("t_check_ns", "must be > 0");
    if (c.coordinator) {
      ++coordinators;
      if (n.power != PowerSource::External) throw ConfigInvalid("power", "the coordinator is externally powered");
    }
    if (n.harvester) {
      try {
        n.harvester->validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigInvalid(e.what(), "out of range");
      }
    }
    if (n.initial_v < 0) throw ConfigInvalid("initial_v", "must be >= 0");
  }
  if (coordinators > 1) throw ConfigInvalid("coordinator", "at most one coordinator");

  auto needs_sender = [&](int id, const char* field) {
    const NodeSpec* n = find(id);
    if (!n) throw ConfigInvalid(field, "unknown node " + std::to_string(id));
    if (n->neuron.priority == 0) throw ConfigInvalid(field, "node " + std::to_string(id) + " is receive-only");
  };
  const auto& t = traffic;
  const bool auto_harvest = std::any_of(nodes.begin(), nodes.end(), [](const NodeSpec& n) {
    return n.power == PowerSource::Harvested && !n.harvester;
  });
  if ((t.carrier || auto_harvest || t.kind == TrafficKind::Trigger) && t.source < 0 && !coordinator()) {
    throw ConfigInvalid("coordinator", "scenario needs a coordinator");
  }
  if (t.kind != TrafficKind::None) {
    if (t.count < 0) throw ConfigInvalid("count", "must be >= 0");
    if (t.interval <= Nanos{0}) throw ConfigInvalid("interval_ns", "must be > 0");
    if (t.start < Nanos{0}) throw ConfigInvalid("start_ns", "must be >= 0");
  }
  switch (t.kind) {
    case TrafficKind::None: break;
    case TrafficKind::Trigger:
      needs_sender(t.source >= 0 ? t.source : coordinator()->neuron.id, "source");
      if (t.fanout < 1) throw ConfigInvalid("fanout", "must be >= 1");
      break;
    case TrafficKind::Release:
      if (t.release_nodes.empty()) throw ConfigInvalid("release_nodes", "empty");
      for (int id : t.release_nodes) needs_sender(id, "release_nodes");
      if (t.dest < 0 || t.dest > 255) throw ConfigInvalid("dest", "must be in [0, 255]");
      break;
    case TrafficKind::Periodic:
      needs_sender(t.source >= 0 ? t.source : (coordinator() ? coordinator()->neuron.id : -1), "source");
      if (t.dest < 0 || t.dest > 255) throw ConfigInvalid("dest", "must be in [0, 255]");
      break;
  }
  if (t.carrier) {
    if (!(t.carrier_start >= Nanos{0} && t.carrier_end > t.carrier_start)) {
      throw ConfigInvalid("carrier_end_ns", "carrier window is empty");
    }
  }
  if (sensing.enabled) {
    const NodeSpec* s = find(sensing.node);
    if (!s) throw ConfigInvalid("sensing.node", "unknown node");
    if (s->neuron.coordinator) throw ConfigInvalid("sensing.node", "the coordinator radiates the carrier");
    if (s->power != PowerSource::External) throw ConfigInvalid("sensing.node", "sensing receivers are externally powered");
    if (!t.carrier || sensing.start < t.carrier_start || sensing.end > t.carrier_end || sensing.end <= sensing.start) {
      throw ConfigInvalid("sensing.start_ns", "sensing window must lie inside the carrier window");
    }
    if (sensing.period <= Nanos{0}) throw ConfigInvalid("sensing.period_ns", "must be > 0");
    try {
      sensing.model.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigInvalid(std::string("sensing.") + e.what(), "out of range");
    }
  }
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

template <class Pred>
double fraction(std::size_t n, Pred pred) {
  if (n == 0) return std::nan("");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < n; ++i) ok += pred(i) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(n);
}

}  // namespace

double Metrics::communication_reliability() const {
  if (!trials.empty()) return fraction(trials.size(), [&](std::size_t i) { return trials[i].communication_ok(); });
  return fraction(frames.size(), [&](std::size_t i) { return frames[i].crc_ok; });
}

double Metrics::contention_reliability() const {
  if (!trials.empty()) return fraction(trials.size(), [&](std::size_t i) { return trials[i].contention_ok(); });
  return fraction(frames.size(), [&](std::size_t i) { return frames[i].winner_correct; });
}

double Metrics::joint_reliability() const {
  if (!trials.empty()) return fraction(trials.size(), [&](std::size_t i) { return trials[i].joint_ok(); });
  return fraction(frames.size(), [&](std::size_t i) { return frames[i].crc_ok && frames[i].winner_correct; });
}

double Metrics::delivery_ratio() const {
  const auto sent = delivered_ok + delivered_corrupt;
  return sent == 0 ? std::nan("") : static_cast<double>(delivered_ok) / static_cast<double>(sent);
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

using codec::Level;
using codec::OokTimeline;
using Interval = std::pair<Nanos, Nanos>;

constexpr double kExternalSupplyV = 3.3;

enum class EvKind {
  Traffic,
  IdleCheck,
  PreambleDone,
  CheckEnd,
  FrameDone,
  RxEnd,
  EnergyThreshold,
  TraceSample,
  CarrierStart,
  CarrierStop,
  SenseStart,
  SenseTick,
  SenseStop,
};

struct Emission {
  enum class Kind { Preamble, Frame, Carrier } kind;
  int node;
  Nanos start;
  OokTimeline tl;
  std::vector<Interval> on;  // absolute ON runs
  QueuedFrame qf{};
  codec::Bitstream body;
  std::vector<bool> results;  // decode outcome at each addressed receiver

  Emission(Kind k, int n, Nanos t, OokTimeline timeline) : kind(k), node(n), start(t), tl(std::move(timeline)) {
    Nanos cursor = start;
    for (const auto& s : tl.segments()) {
      if (s.level == Level::On) on.emplace_back(cursor, cursor + s.duration);
      cursor += s.duration;
    }
  }

  Nanos end() const { return start + tl.duration(); }
  Nanos last_on_end() const { return on.empty() ? start : on.back().second; }

  bool on_during(Nanos a, Nanos b) const {
    for (const auto& [x, y] : on) {
      if (x < b && a < y) return true;
    }
    return false;
  }

  void truncate(Nanos at) {
    if (at >= end()) return;
    OokTimeline cut;
    Nanos cursor = start;
    for (const auto& s : tl.segments()) {
      if (cursor >= at) break;
      cut.append(s.level, std::min(s.duration, at - cursor));
      cursor += s.duration;
    }
    tl = std::move(cut);
    std::erase_if(on, [&](const Interval& i) { return i.first >= at; });
    if (!on.empty()) on.back().second = std::min(on.back().second, at);
  }
};

using EmissionPtr = std::shared_ptr<Emission>;

struct Event {
  Nanos t;
  std::uint64_t seq;
  EvKind kind;
  int node = -1;
  std::uint64_t token = 0;
  int k = 0;
  EmissionPtr em;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const { return a.t != b.t ? a.t > b.t : a.seq > b.seq; }
};

struct Node {
  NodeSpec spec;
  MacState mac;
  Mode mode = Mode::Listen;
  bool harvested = false;
  energy::HarvesterModel harvester{};
  energy::StorageConfig storage{};
  energy::EnergyState energy{};
  Nanos energy_t{0};
  Rng rng;
  Rng link;
  std::uint64_t wait_token = 0;
  std::uint64_t epoch = 0;
  std::uint64_t energy_token = 0;
  Nanos attempt_start{0};
  EmissionPtr emitting;

  const NeuronConfig& cfg() const { return spec.neuron; }
};

struct TrialState {
  TrialRecord rec;
  int source = -1;  // node index
  bool resolved = false;
};

class Simulation {
 public:
  explicit Simulation(const ScenarioConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    setup_nodes();
    setup_schedule();
  }

  Metrics run() {
    while (!queue_.empty()) {
      Event ev = queue_.top();
      if (ev.t > cfg_.run.duration) break;
      queue_.pop();
      now_ = ev.t;
      ++metrics_.events;
      dispatch(ev);
      if ((metrics_.events & 255) == 0) prune();
    }
    finish();
    return std::move(metrics_);
  }

 private:
  // --- setup -------------------------------------------------------------

  void setup_nodes() {
    for (const auto& spec : cfg_.nodes) {
      Node n;
      n.spec = spec;
      n.rng = Rng(derive_seed(cfg_.run.seed, streams::node(spec.neuron.id)));
      n.link = Rng(derive_seed(cfg_.run.seed, streams::link(spec.neuron.id)));
      n.harvested = spec.power == PowerSource::Harvested;
      n.storage = {spec.neuron.capacitance, spec.neuron.v_on, spec.neuron.v_off, spec.neuron.loads};
      if (n.harvested) {
        n.harvester = resolve_harvester(cfg_, spec);
        n.energy.v_cap = spec.initial_v;
        n.energy.alive = spec.initial_v >= spec.neuron.v_on;
        n.mode = n.energy.alive ? Mode::Harvest : Mode::Off;
      } else {
        n.energy = {kExternalSupplyV, true};
        n.mode = Mode::Listen;
      }
      index_[spec.neuron.id] = static_cast<int>(nodes_.size());
      nodes_.push_back(std::move(n));
    }
    const std::size_t count = nodes_.size();
    audible_.assign(count, std::vector<char>(count, 0));
    for (std::size_t a = 0; a < count; ++a) {
      for (std::size_t b = 0; b < count; ++b) {
        audible_[a][b] = medium::rssi(cfg_.substrate, nodes_[a].cfg().position_m, nodes_[b].cfg().position_m,
                                      Level::On) >= cfg_.substrate.threshold_v;
      }
    }
  }

  void setup_schedule() {
    const auto& t = cfg_.traffic;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      Node& n = nodes_[i];
      if (n.mode == Mode::Harvest) arm_wait(static_cast<int>(i));
      if (n.harvested) reschedule_threshold(static_cast<int>(i));
      if (n.harvested && n.energy.alive) metrics_.activations.emplace(n.cfg().id, Nanos{0});
    }
    if (t.kind != TrafficKind::None) {
      for (int k = 0; k < t.count; ++k) schedule(t.start + t.interval * k, EvKind::Traffic, -1, 0, k);
    }
    if (t.kind == TrafficKind::Trigger) setup_responders();
    if (t.carrier) {
      schedule(t.carrier_start, EvKind::CarrierStart);
      schedule(t.carrier_end, EvKind::CarrierStop);
    }
    if (cfg_.run.trace_energy) schedule(Nanos{0}, EvKind::TraceSample);
    if (cfg_.sensing.enabled) {
      schedule(cfg_.sensing.start, EvKind::SenseStart, index_.at(cfg_.sensing.node));
    }
  }

  int source_index() const {
    const auto& t = cfg_.traffic;
    return index_.at(t.source >= 0 ? t.source : cfg_.coordinator()->neuron.id);
  }

  int carrier_index() const {
    const NodeSpec* c = cfg_.coordinator();
    return index_.at(c ? c->neuron.id : cfg_.traffic.source);
  }

  void setup_responders() {
    const int src = source_index();
    const double pos = nodes_[static_cast<std::size_t>(src)].cfg().position_m;
    std::vector<int> right;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& c = nodes_[i].cfg();
      if (static_cast<int>(i) != src && c.priority > 0 && c.position_m > pos) right.push_back(static_cast<int>(i));
    }
    std::sort(right.begin(), right.end(), [&](int a, int b) {
      const auto& ca = nodes_[static_cast<std::size_t>(a)].cfg();
      const auto& cb = nodes_[static_cast<std::size_t>(b)].cfg();
      return ca.position_m != cb.position_m ? ca.position_m < cb.position_m : ca.id < cb.id;
    });
    if (static_cast<int>(right.size()) > cfg_.traffic.fanout) right.resize(static_cast<std::size_t>(cfg_.traffic.fanout));
    responders_.insert(right.begin(), right.end());
  }

  // --- event plumbing ----------------------------------------------------

  void schedule(Nanos t, EvKind kind, int node = -1, std::uint64_t token = 0, int k = 0, EmissionPtr em = nullptr) {
    queue_.push(Event{t, seq_++, kind, node, token, k, std::move(em)});
  }

  Node& node(int i) { return nodes_[static_cast<std::size_t>(i)]; }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EvKind::Traffic: on_traffic(ev.k); break;
      case EvKind::IdleCheck: on_idle_check(ev.node, ev.token); break;
      case EvKind::PreambleDone:
        if (ev.token == node(ev.node).epoch) {
          node(ev.node).emitting.reset();
          apply(ev.node, {MacEventKind::PreambleDone});
        }
        break;
      case EvKind::CheckEnd:
        if (ev.token == node(ev.node).epoch) on_check_end(ev.node);
        break;
      case EvKind::FrameDone:
        if (ev.token == node(ev.node).epoch) on_frame_done(ev.node);
        break;
      case EvKind::RxEnd:
        if (ev.token == node(ev.node).epoch) on_rx_end(ev.node, ev.em);
        break;
      case EvKind::EnergyThreshold:
        if (ev.token == node(ev.node).energy_token) {
          advance_energy(ev.node);
          settle_alive(ev.node);
          reschedule_threshold(ev.node);
        }
        break;
      case EvKind::TraceSample: on_trace(); break;
      case EvKind::CarrierStart: on_carrier(true); break;
      case EvKind::CarrierStop: on_carrier(false); break;
      case EvKind::SenseStart:
        apply(ev.node, {MacEventKind::SenseStart});
        schedule(now_, EvKind::SenseTick, ev.node);
        break;
      case EvKind::SenseTick: on_sense_tick(ev.node); break;
      case EvKind::SenseStop: on_sense_stop(ev.node); break;
    }
  }

  // --- MAC glue ----------------------------------------------------------

  void apply(int i, const MacEvent& event) {
    Node& n = node(i);
    advance_energy(i);
    MacTransition tr = mac_transition(n.mac, n.mode, event);
    n.mac = std::move(tr.state);
    n.mode = tr.mode;
    for (MacAction a : tr.actions) perform(i, a);
    if (n.harvested) reschedule_threshold(i);
  }

  void perform(int i, MacAction a) {
    Node& n = node(i);
    switch (a) {
      case MacAction::WaitForIdle: arm_wait(i); break;
      case MacAction::EmitPreamble: {
        const int p = n.cfg().priority;
        n.emitting = emit(Emission::Kind::Preamble, i, codec::cell_train(p));
        n.attempt_start = now_;
        auto [it, fresh] = round_max_.emplace(now_, p);
        if (!fresh) it->second = std::max(it->second, p);
        schedule(now_ + codec::kCell * p, EvKind::PreambleDone, i, n.epoch);
        break;
      }
      case MacAction::StartCheck:
        schedule(now_ + n.cfg().timing.t_turn + n.cfg().timing.t_check, EvKind::CheckEnd, i, n.epoch);
        break;
      case MacAction::EmitFrame: emit_frame(i); break;
    }
  }

  EmissionPtr emit(Emission::Kind kind, int i, OokTimeline tl) {
    auto em = std::make_shared<Emission>(kind, i, now_, std::move(tl));
    emissions_.push_back(em);
    return em;
  }

  void emit_frame(int i) {
    Node& n = node(i);
    const QueuedFrame& qf = n.mac.tx_queue.front();
    codec::Bitstream body = codec::serialize_body(qf.frame);
    auto em = emit(Emission::Kind::Frame, i, codec::frame_section(body));
    em->qf = qf;
    em->body = std::move(body);
    n.emitting = em;
    const Nanos done = now_ + codec::kFrameAirtime;
    for (std::size_t r = 0; r < nodes_.size(); ++r) {
      Node& rx = nodes_[r];
      if (static_cast<int>(r) == i || rx.mode != Mode::Listen || !audible_[static_cast<std::size_t>(i)][r]) continue;
      apply(static_cast<int>(r), {MacEventKind::RxStart});
      rx.wait_token++;
      schedule(done, EvKind::RxEnd, static_cast<int>(r), rx.epoch, 0, em);
    }
    schedule(done, EvKind::FrameDone, i, n.epoch);
  }

  // End of the last carrier burst from emissions already under way. Anything
  // starting at this very instant belongs to the same contention round.
  Nanos last_audible_on_end(int i) const {
    Nanos last{-1};
    for (const auto& e : emissions_) {
      if (e->node == i || e->start >= now_ || !audible_[static_cast<std::size_t>(e->node)][static_cast<std::size_t>(i)]) {
        continue;
      }
      if (!e->on.empty()) last = std::max(last, e->last_on_end());
    }
    return last;
  }

  void arm_wait(int i) {
    Node& n = node(i);
    const std::uint64_t token = ++n.wait_token;
    const Nanos from = std::max(now_, last_audible_on_end(i));
    schedule(from + n.cfg().timing.t_idle, EvKind::IdleCheck, i, token);
  }

  void on_idle_check(int i, std::uint64_t token) {
    Node& n = node(i);
    if (token != n.wait_token || (n.mode != Mode::Listen && n.mode != Mode::Harvest)) return;
    const Nanos last = last_audible_on_end(i);
    if (last > now_ - n.cfg().timing.t_idle) {
      schedule(last + n.cfg().timing.t_idle, EvKind::IdleCheck, i, token);
      return;
    }
    apply(i, {MacEventKind::IdleElapsed});
  }

  void on_check_end(int i) {
    Node& n = node(i);
    const Nanos b = now_;
    const Nanos a = b - n.cfg().timing.t_check;
    std::vector<medium::Transmitter> heard;
    for (const auto& e : emissions_) {
      if (e->node != i && e->on_during(a, b)) heard.push_back({node(e->node).cfg().position_m, Level::On});
    }
    const auto obs = medium::channel_observation(cfg_.substrate, heard, n.cfg().position_m, n.rng);
    const auto sensed = medium::sense_with_error(obs.logical, cfg_.substrate.sense_error_prob, n.rng);
    if (sensed == medium::Busy::Busy) ++metrics_.deferrals;
    MacEvent ev{MacEventKind::CheckResult};
    ev.check = sensed;
    apply(i, ev);
  }

  void on_frame_done(int i) {
    Node& n = node(i);
    EmissionPtr em = std::move(n.emitting);
    const QueuedFrame& qf = em->qf;
    bool ok;
    if (qf.frame.dest == codec::kBroadcast) {
      ok = !em->results.empty() && std::all_of(em->results.begin(), em->results.end(), [](bool b) { return b; });
    } else {
      ok = !em->results.empty() && em->results.front();
    }
    const auto it = round_max_.find(n.attempt_start);
    const bool winner = it != round_max_.end() && it->second == n.cfg().priority;
    metrics_.frames.push_back({qf.enqueued, now_, n.cfg().id, qf.frame.dest, qf.frame.priority, ok, winner});
    (ok ? metrics_.delivered_ok : metrics_.delivered_corrupt)++;
    apply(i, {MacEventKind::FrameDone});
  }

  bool addressed_to(const Emission& em, int r) const {
    return em.qf.frame.dest == codec::kBroadcast || em.qf.frame.dest == nodes_[static_cast<std::size_t>(r)].cfg().id;
  }

  bool decode_at(int r, const Emission& em) {
    Node& rx = node(r);
    const codec::Bitstream received = medium::corrupt_frame(em.body, cfg_.substrate, rx.link);
    const OokTimeline section = codec::frame_section(received);
    const Nanos a = em.start;
    const Nanos b = em.start + codec::kFrameAirtime;
    std::vector<codec::PlacedTimeline> parts{{a, &section}};
    for (const auto& e : emissions_) {
      if (e.get() == &em || e->node == r || !audible_[static_cast<std::size_t>(e->node)][static_cast<std::size_t>(r)]) {
        continue;
      }
      if (e->on_during(a, b)) parts.push_back({e->start, &e->tl});
    }
    try {
      const OokTimeline seen = parts.size() == 1 ? section : codec::superpose(parts, a, b);
      codec::parse_frame_section(seen);
      return true;
    } catch (const codec::CodecError&) {
      return false;
    }
  }

  void on_rx_end(int r, const EmissionPtr& em) {
    Node& rx = node(r);
    if (rx.mode != Mode::RxFrame) return;
    std::optional<bool> ok;
    if (addressed_to(*em, r)) {
      ok = decode_at(r, *em);
      em->results.push_back(*ok);
    }
    apply(r, {MacEventKind::RxDone});
    if (ok) on_application(r, *em, *ok);
  }

  // --- traffic and trials ------------------------------------------------

  std::uint64_t next_serial() { return serial_++; }

  void enqueue(int i, std::uint8_t dest, std::array<std::uint8_t, codec::kPayloadOctets> payload, int trial) {
    Node& n = node(i);
    MacEvent ev{MacEventKind::TxRequest};
    ev.frame.frame = codec::make_frame(n.cfg().priority, dest, payload, cfg_.run.n_priority);
    ev.frame.enqueued = now_;
    ev.frame.serial = next_serial();
    ev.frame.trial = trial;
    ++metrics_.enqueued;
    apply(i, ev);
  }

  static std::array<std::uint8_t, codec::kPayloadOctets> payload(std::uint8_t tag, int k, int a, int b) {
    return {tag, static_cast<std::uint8_t>(k >> 8), static_cast<std::uint8_t>(k), static_cast<std::uint8_t>(a),
            static_cast<std::uint8_t>(b), 0};
  }

  void on_traffic(int k) {
    const auto& t = cfg_.traffic;
    switch (t.kind) {
      case TrafficKind::None: break;
      case TrafficKind::Trigger: {
        const int src = source_index();
        TrialState ts;
        ts.rec.start = now_;
        ts.source = src;
        trials_.push_back(ts);
        enqueue(src, codec::kBroadcast, payload('Q', k, t.fanout, 0), static_cast<int>(trials_.size()) - 1);
        break;
      }
      case TrafficKind::Release:
        for (int id : t.release_nodes) enqueue(index_.at(id), static_cast<std::uint8_t>(t.dest), payload('R', k, id, 0), -1);
        break;
      case TrafficKind::Periodic:
        enqueue(source_index(), static_cast<std::uint8_t>(t.dest), payload('P', k, 0, 0), -1);
        break;
    }
  }

  void on_application(int r, const Emission& em, bool ok) {
    const int trial = em.qf.trial;
    if (trial < 0) return;
    TrialState& ts = trials_[static_cast<std::size_t>(trial)];
    if (em.node == ts.source) {
      // Request reaching a responder.
      if (!ok || !responders_.count(r)) return;
      const Node& rx = node(r);
      ++ts.rec.contenders;
      if (ts.rec.expected_src < 0 || rx.cfg().priority > node(index_.at(ts.rec.expected_src)).cfg().priority) {
        ts.rec.expected_src = rx.cfg().id;
      }
      enqueue(r, static_cast<std::uint8_t>(node(ts.source).cfg().id), payload('A', trial, rx.cfg().id, 0), trial);
    } else if (r == ts.source && !ts.resolved) {
      ts.resolved = true;
      ts.rec.first_src = node(em.node).cfg().id;
      ts.rec.crc_ok = ok;
    }
  }

  // --- energy ------------------------------------------------------------

  void advance_energy(int i) {
    Node& n = node(i);
    if (!n.harvested) return;
    if (now_ > n.energy_t) {
      n.energy = energy::energy_step(n.energy, n.mode, n.harvester, n.storage, now_ - n.energy_t, carrier_on_);
    }
    n.energy_t = now_;
  }

  void settle_alive(int i) {
    Node& n = node(i);
    if (n.mode == Mode::Off && n.energy.alive) {
      metrics_.activations.emplace(n.cfg().id, now_);
      apply(i, {MacEventKind::Activate});
    } else if (n.mode != Mode::Off && !n.energy.alive) {
      ++n.epoch;
      ++n.wait_token;
      if (n.emitting) {
        n.emitting->truncate(now_);
        n.emitting.reset();
      }
      apply(i, {MacEventKind::Brownout});
    }
  }

  void reschedule_threshold(int i) {
    Node& n = node(i);
    const std::uint64_t token = ++n.energy_token;
    const bool harvesting = harvests(n.mode) && carrier_on_;
    const double load = n.storage.loads.for_mode(n.mode);
    const double target = n.energy.alive ? n.storage.v_off : n.storage.v_on;
    const auto secs = energy::time_to_voltage(n.harvester, n.storage.capacitance, load, n.energy.v_cap, target, harvesting);
    if (!secs) return;
    const Nanos dt{static_cast<std::int64_t>(std::ceil(*secs * 1e9)) + 1};
    if (now_ + dt <= cfg_.run.duration) schedule(now_ + dt, EvKind::EnergyThreshold, i, token);
  }

  void on_carrier(bool start) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) advance_energy(static_cast<int>(i));
    carrier_on_ = start;
    const int c = carrier_index();
    if (start) {
      const auto& t = cfg_.traffic;
      OokTimeline tl;
      tl.append(Level::On, t.carrier_end - t.carrier_start);
      auto em = emit(Emission::Kind::Carrier, c, std::move(tl));
      if (node(c).mode == Mode::Listen || node(c).mode == Mode::Harvest) {
        node(c).emitting = std::move(em);
        node(c).wait_token++;
        apply(c, {MacEventKind::CarrierStart});
      }
    } else if (node(c).mac.carrier) {
      node(c).emitting.reset();
      apply(c, {MacEventKind::CarrierStop});
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].harvested) reschedule_threshold(static_cast<int>(i));
    }
  }

  void on_trace() {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      Node& n = nodes_[i];
      advance_energy(static_cast<int>(i));
      metrics_.energy.push_back({now_, n.cfg().id, n.harvested ? n.energy.v_cap : kExternalSupplyV, n.mode});
    }
    const Nanos next = now_ + cfg_.run.energy_trace_period;
    if (next <= cfg_.run.duration) schedule(next, EvKind::TraceSample);
  }

  // --- sensing -----------------------------------------------------------

  void on_sense_tick(int i) {
    Node& n = node(i);
    if (n.mode != Mode::Sense) return;
    std::vector<medium::Transmitter> active;
    for (const auto& e : emissions_) {
      if (e->node != i && e->on_during(now_, now_ + Nanos{1})) active.push_back({node(e->node).cfg().position_m, Level::On});
    }
    const auto intruder = cfg_.sensing.trajectory.at(now_ - cfg_.sensing.start);
    const double v = sense_sample(n.cfg().position_m, cfg_.substrate, active, cfg_.sensing.model, intruder, n.rng);
    metrics_.sensing.push_back({now_, v});
    const Nanos next = now_ + cfg_.sensing.period;
    if (next < cfg_.sensing.end) {
      schedule(next, EvKind::SenseTick, i);
    } else {
      schedule(cfg_.sensing.end, EvKind::SenseStop, i);
    }
  }

  void on_sense_stop(int i) {
    if (node(i).mode == Mode::Sense) apply(i, {MacEventKind::SenseStop});
  }

  // --- housekeeping ------------------------------------------------------

  void prune() {
    const Nanos horizon = now_ - 10ms;
    std::erase_if(emissions_, [&](const EmissionPtr& e) { return e->end() < horizon && e.use_count() == 1; });
  }

  void finish() {
    now_ = std::min(now_, cfg_.run.duration);
    for (const auto& n : nodes_) metrics_.pending += n.mac.tx_queue.size();
    for (const auto& ts : trials_) metrics_.trials.push_back(ts.rec);
    if (cfg_.sensing.enabled && !metrics_.sensing.empty()) {
      std::vector<double> v;
      v.reserve(metrics_.sensing.size());
      for (const auto& s : metrics_.sensing) v.push_back(s.volts);
      metrics_.detections = sensing::detect_events(v, cfg_.sensing.period, cfg_.substrate.noise_sigma,
                                                   cfg_.sensing.detector, metrics_.sensing.front().t);
    }
  }

  ScenarioConfig cfg_;
  std::vector<Node> nodes_;
  std::unordered_map<int, int> index_;
  std::vector<std::vector<char>> audible_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  std::uint64_t serial_ = 0;
  Nanos now_{0};
  bool carrier_on_ = false;
  std::vector<EmissionPtr> emissions_;
  std::map<Nanos, int> round_max_;
  std::vector<TrialState> trials_;
  std::set<int> responders_;
  Metrics metrics_;
};

}  // namespace

energy::HarvesterModel resolve_harvester(const ScenarioConfig& config, const NodeSpec& node) {
  if (node.harvester) return *node.harvester;
  const NodeSpec* coord = config.coordinator();
  const double origin = coord ? coord->neuron.position_m : 0.0;
  return energy::default_calibration().at(std::abs(node.neuron.position_m - origin));
}

Metrics run(const ScenarioConfig& config) { return Simulation(config).run(); }

// ---------------------------------------------------------------------------
// Replication

std::uint64_t replicate_seed(std::uint64_t base, int k) {
  return k == 0 ? base : derive_seed(base, static_cast<std::uint64_t>(k));
}

std::map<std::string, double> run_statistics(const Metrics& m) {
  std::map<std::string, double> s;
  s["communication_reliability"] = m.communication_reliability();
  s["contention_reliability"] = m.contention_reliability();
  s["joint_reliability"] = m.joint_reliability();
  s["delivery_ratio"] = m.delivery_ratio();
  s["frames"] = static_cast<double>(m.frames.size());
  s["deferrals"] = static_cast<double>(m.deferrals);
  return s;
}

Aggregate replicate(const ScenarioConfig& config, int runs, unsigned threads) {
  if (runs < 1) throw std::invalid_argument("replicate: runs must be >= 1");
  config.validate();
  std::vector<std::map<std::string, double>> stats(static_cast<std::size_t>(runs));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < runs; k = next++) {
      ScenarioConfig c = config;
      c.run.seed = replicate_seed(config.run.seed, k);
      stats[static_cast<std::size_t>(k)] = run_statistics(run(c));
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(runs));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  Aggregate agg;
  agg.runs = runs;
  std::map<std::string, std::vector<double>> values;
  for (const auto& s : stats) {
    for (const auto& [k, v] : s) {
      if (std::isfinite(v)) values[k].push_back(v);
    }
  }
  for (auto& [k, v] : values) {
    // Sorting first makes the sums independent of completion order.
    std::sort(v.begin(), v.end());
    Estimate e;
    e.samples = static_cast<int>(v.size());
    double sum = 0;
    for (double x : v) sum += x;
    e.mean = sum / static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - e.mean) * (x - e.mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    const double half = 1.96 * sd / std::sqrt(static_cast<double>(v.size()));
    e.ci_low = e.mean - half;
    e.ci_high = e.mean + half;
    agg.metrics[k] = e;
  }
  return agg;
}

}  // namespace seth

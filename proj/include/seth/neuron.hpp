#pragma once

#include <deque>
#include <span>
#include <stdexcept>
#include <vector>

#include "seth/energy.hpp"
#include "seth/frame_codec.hpp"
#include "seth/medium.hpp"
#include "seth/mode.hpp"
#include "seth/sensing.hpp"

namespace seth {

struct MacTimings {
  Nanos t_idle = 100us;
  Nanos t_turn = 5us;
  Nanos t_check = 20us;
};

struct NeuronConfig {
  int id = 0;
  int priority = 1;  // 0: receive-only, never transmits
  double position_m = 0.0;
  double capacitance = 100e-6;
  double v_on = 2.0;
  double v_off = 1.8;
  LoadCurrents loads{};
  MacTimings timing{};
  bool coordinator = false;
};

struct QueuedFrame {
  codec::Frame frame;
  Nanos enqueued{0};
  std::uint64_t serial = 0;
  int trial = -1;  // trigger trial this frame answers, if any
};

struct MacState {
  std::deque<QueuedFrame> tx_queue;
  int deferrals = 0;
  bool carrier = false;  // TX_FRAME is the continuous power/sensing carrier
};

enum class MacEventKind {
  TxRequest,
  IdleElapsed,
  PreambleDone,
  CheckResult,
  FrameDone,
  RxStart,
  RxDone,
  Brownout,
  Activate,
  SenseStart,
  SenseStop,
  CarrierStart,
  CarrierStop,
};

struct MacEvent {
  MacEventKind kind;
  medium::Busy check = medium::Busy::Idle;  // CheckResult only
  QueuedFrame frame{};                      // TxRequest only
};

enum class MacAction { WaitForIdle, EmitPreamble, StartCheck, EmitFrame };

struct MacTransition {
  MacState state;
  Mode mode;
  std::vector<MacAction> actions;
};

class IllegalTransition : public std::logic_error {
 public:
  IllegalTransition(Mode mode, MacEventKind kind);
};

const char* to_string(MacEventKind k) noexcept;

/// The prioritized preemptive MAC as a pure function:
///   1. nothing queued: LISTEN
///   2. queued and the channel idle for T_idle: TX_PREAMBLE (p cells)
///   3. after the preamble, ARB_CHECK; BUSY defers to LISTEN, IDLE sends
///   4. FRAME_DONE: LISTEN
/// Brownout keeps the queue. Activate enters HARVEST and waits for idle.
MacTransition mac_transition(const MacState& state, Mode mode, const MacEvent& event);

class NoCarrier : public std::runtime_error {
 public:
  NoCarrier() : std::runtime_error("sensing needs an active carrier") {}
};

/// One ADC sample of the carrier at `rx_pos` while an intruder perturbs it.
/// The strongest ON transmitter is the reference carrier.
double sense_sample(double rx_pos, const medium::SubstrateModel& substrate,
                    std::span<const medium::Transmitter> transmitters, const sensing::SensingModel& model,
                    const sensing::IntruderState& intruder, Rng& rng);

}  // namespace seth

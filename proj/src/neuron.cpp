#include "seth/neuron.hpp"

#include <string>

namespace seth {

const char* to_string(MacEventKind k) noexcept {
  switch (k) {
    case MacEventKind::TxRequest: return "TX_REQUEST";
    case MacEventKind::IdleElapsed: return "CHANNEL_IDLE_ELAPSED";
    case MacEventKind::PreambleDone: return "PREAMBLE_DONE";
    case MacEventKind::CheckResult: return "CHECK_RESULT";
    case MacEventKind::FrameDone: return "FRAME_DONE";
    case MacEventKind::RxStart: return "RX_START";
    case MacEventKind::RxDone: return "RX_DONE";
    case MacEventKind::Brownout: return "BROWNOUT";
    case MacEventKind::Activate: return "ACTIVATE";
    case MacEventKind::SenseStart: return "SENSE_START";
    case MacEventKind::SenseStop: return "SENSE_STOP";
    case MacEventKind::CarrierStart: return "CARRIER_START";
    case MacEventKind::CarrierStop: return "CARRIER_STOP";
  }
  return "?";
}

IllegalTransition::IllegalTransition(Mode mode, MacEventKind kind)
    : std::logic_error(std::string(to_string(kind)) + " in mode " + std::string(to_string(mode))) {}

MacTransition mac_transition(const MacState& state, Mode mode, const MacEvent& event) {
  MacTransition out{state, mode, {}};
  auto illegal = [&] { return IllegalTransition(mode, event.kind); };
  auto back_to_listen = [&] {
    out.mode = Mode::Listen;
    if (!out.state.tx_queue.empty()) out.actions.push_back(MacAction::WaitForIdle);
  };

  switch (event.kind) {
    case MacEventKind::TxRequest: {
      const bool was_empty = out.state.tx_queue.empty();
      out.state.tx_queue.push_back(event.frame);
      // HARVEST already has a wait armed from activation; busy modes re-arm on
      // their way back to LISTEN.
      if (mode == Mode::Listen && was_empty) out.actions.push_back(MacAction::WaitForIdle);
      return out;
    }
    case MacEventKind::IdleElapsed:
      if (mode != Mode::Listen && mode != Mode::Harvest) throw illegal();
      if (out.state.tx_queue.empty()) {
        out.mode = Mode::Listen;
      } else {
        out.mode = Mode::TxPreamble;
        out.actions.push_back(MacAction::EmitPreamble);
      }
      return out;
    case MacEventKind::PreambleDone:
      if (mode != Mode::TxPreamble) throw illegal();
      out.mode = Mode::ArbCheck;
      out.actions.push_back(MacAction::StartCheck);
      return out;
    case MacEventKind::CheckResult:
      if (mode != Mode::ArbCheck) throw illegal();
      if (event.check == medium::Busy::Busy) {
        ++out.state.deferrals;
        back_to_listen();
      } else {
        out.mode = Mode::TxFrame;
        out.actions.push_back(MacAction::EmitFrame);
      }
      return out;
    case MacEventKind::FrameDone:
      if (mode != Mode::TxFrame || out.state.carrier || out.state.tx_queue.empty()) throw illegal();
      out.state.tx_queue.pop_front();
      back_to_listen();
      return out;
    case MacEventKind::RxStart:
      if (mode != Mode::Listen) throw illegal();
      out.mode = Mode::RxFrame;
      return out;
    case MacEventKind::RxDone:
      if (mode != Mode::RxFrame) throw illegal();
      back_to_listen();
      return out;
    case MacEventKind::Brownout:
      if (mode == Mode::Off) throw illegal();
      out.mode = Mode::Off;
      out.state.carrier = false;
      return out;
    case MacEventKind::Activate:
      if (mode != Mode::Off) throw illegal();
      out.mode = Mode::Harvest;
      out.actions.push_back(MacAction::WaitForIdle);
      return out;
    case MacEventKind::SenseStart:
      if (mode != Mode::Listen && mode != Mode::Harvest) throw illegal();
      out.mode = Mode::Sense;
      return out;
    case MacEventKind::SenseStop:
      if (mode != Mode::Sense) throw illegal();
      back_to_listen();
      return out;
    case MacEventKind::CarrierStart:
      if (mode != Mode::Listen && mode != Mode::Harvest) throw illegal();
      out.mode = Mode::TxFrame;
      out.state.carrier = true;
      return out;
    case MacEventKind::CarrierStop:
      if (mode != Mode::TxFrame || !out.state.carrier) throw illegal();
      out.state.carrier = false;
      back_to_listen();
      return out;
  }
  throw illegal();
}

double sense_sample(double rx_pos, const medium::SubstrateModel& substrate,
                    std::span<const medium::Transmitter> transmitters, const sensing::SensingModel& model,
                    const sensing::IntruderState& intruder, Rng& rng) {
  const medium::Transmitter* carrier = nullptr;
  double baseline = 0.0;
  for (const auto& t : transmitters) {
    const double v = medium::rssi(substrate, t.position_m, rx_pos, t.level);
    if (t.level == codec::Level::On && (!carrier || v > baseline)) {
      carrier = &t;
      baseline = v;
    }
  }
  if (!carrier) throw NoCarrier();
  const double clean = sensing::perturbed_rssi(baseline, model, intruder, rx_pos, carrier->position_m);
  return clean + rng.normal(0.0, substrate.noise_sigma);
}

}  // namespace seth

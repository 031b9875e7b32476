#pragma once

// Harvester and per-packet energy calibrated against bench measurements of
// charge times and sustainable packet rates at 0.5 m and 1.0 m.

#include <array>

#include "seth/energy.hpp"

namespace seth::energy {

struct ChargeReference {
  double distance_m;
  double capacitance;
  double seconds;  // 0 V to 2.0 V
};

struct RateReference {
  double distance_m;
  double capacitance;
  double packets_per_s;
};

extern const std::array<ChargeReference, 6> kChargeTimes;
extern const std::array<RateReference, 6> kPacketRates;

/// Activation outcomes the shared leakage and source resistance must honour:
/// every capacitor activates at 1.5 m, at 2.0 m the 100 uF one does and the
/// 470 uF one does not.
struct ActivationConstraints {
  double margin_v = 0.05;
};

struct Calibration {
  double r_s = 0;
  double i_leak = 0;         // per 100 uF
  double drive_near = 0;     // V_inf / R_s at 0.5 m
  double drive_far = 0;      // at 1.0 m
  double t_active = 0;       // antenna away from the harvester per packet, s
  double e_pkt = 0;          // J per packet at the 2 V operating point

  /// Drive decays exponentially with distance through the two fitted points.
  double drive_at(double distance_m) const;
  HarvesterModel at(double distance_m) const;
};

/// Runs the full calibration (deterministic, well under a second).
Calibration calibrate(const ActivationConstraints& c = {});

/// Cached result of calibrate() with default constraints.
const Calibration& default_calibration();

}  // namespace seth::energy

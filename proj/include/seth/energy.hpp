#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "seth/mode.hpp"
#include "seth/time.hpp"

namespace seth::energy {

inline constexpr double kLeakReferenceCapacitance = 100e-6;

/// Thevenin source seen by the storage capacitor while harvesting.
struct HarvesterModel {
  double v_inf = 0.0;  // open-circuit rectified voltage
  double r_s = 1.0;    // source resistance, ohms
  double i_leak = 0.0; // leakage of a 100 uF capacitor; scales linearly with C

  double leak_at(double capacitance) const noexcept { return i_leak * capacitance / kLeakReferenceCapacitance; }
  double drive() const noexcept { return v_inf / r_s; }
  void validate() const;
};

struct StorageConfig {
  double capacitance = 100e-6;
  double v_on = 2.0;
  double v_off = 1.8;
  LoadCurrents loads{};
};

struct EnergyState {
  double v_cap = 0.0;
  bool alive = false;
};

/// Exact solution of C dV/dt = h (V_inf - V)/R_s - I_mode - I_leak over `dt`,
/// with h = 1 only when the mode harvests and a carrier is present. V is
/// clamped at 0. `alive` follows the hysteresis band at the end of the step.
EnergyState energy_step(EnergyState s, Mode mode, const HarvesterModel& h, const StorageConfig& cfg, Nanos dt,
                        bool carrier_on = true);

/// Seconds to go from `from_v` to `to_v` under a constant load (leakage is
/// added internally). nullopt when the trajectory never reaches `to_v`.
std::optional<double> time_to_voltage(const HarvesterModel& h, double capacitance, double i_load, double from_v,
                                      double to_v, bool harvesting = true);

/// Voltage the capacitor settles at while harvesting under `i_load`.
double steady_state(const HarvesterModel& h, double capacitance, double i_load) noexcept;

struct ChargeObservation {
  double capacitance;
  double seconds;  // 0 V to target
};

struct FitOptions {
  double target_v = 2.0;
  double i_load = LoadCurrents{}.off;
  std::optional<double> pinned_r_s;
  std::optional<double> pinned_i_leak;
  int budget = 4000;
  double max_residual = 0.5;
};

class FitDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitResult {
  HarvesterModel model;
  std::vector<double> residuals;  // (predicted - observed) / observed
  double objective = 0.0;
};

/// Least squares on relative charge-time error over (drive, R_s, I_leak) in
/// log space: coarse grid, then coordinate descent with step halving.
FitResult fit_harvester(const std::vector<ChargeObservation>& obs, const FitOptions& opt = {});

/// Packets per second a node can keep up at the activation point. Each packet
/// keeps the antenna off the harvester for `active_s` and costs `e_pkt` joules.
/// With active_s = 0 this is the plain power balance (P_harvest - P_idle) / E.
double sustainable_packet_rate(const HarvesterModel& h, double capacitance, double e_pkt, double active_s,
                               double i_idle = LoadCurrents{}.harvest, double v_op = 2.0);

/// Same rate measured by stepping the closed form: transmit at V_on for
/// `active_s` drawing `i_tx`, recharge to V_on, repeat.
double simulated_packet_rate(const HarvesterModel& h, const StorageConfig& cfg, double active_s, int packets = 200);

}  // namespace seth::energy

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "seth/time.hpp"

namespace seth::sensing {

/// Swing caused by a conductive body at perpendicular distance r:
///   dV(r) = dV0 / (1 + (r / r0)^alpha), plus squeeze_gain * squeeze,
/// weighted by a raised-cosine coupling g(L) peaking midway between TX and RX.
struct SensingModel {
  double dv0 = 0.3;
  double r0 = 0.05;
  double alpha = 2.0;
  double squeeze_gain = 0.1;
  double g_floor = 0.2;

  void validate() const;
  double swing(double r, double squeeze = 0.0) const noexcept;
  double coupling(double along_m, double tx_pos, double rx_pos) const noexcept;
};

struct IntruderState {
  double along_m = 0.0;   // L
  double r_m = 1e9;       // far away by default
  double squeeze = 0.0;
};

double perturbed_rssi(double baseline, const SensingModel& model, const IntruderState& intruder, double rx_pos,
                      double tx_pos);

struct TrajectorySample {
  Nanos t;
  IntruderState state;
};

class TrajectoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntruderTrajectory {
 public:
  IntruderTrajectory() = default;
  explicit IntruderTrajectory(std::vector<TrajectorySample> samples);

  /// CSV with header `t_ns,L_m,r_m,squeeze`.
  static IntruderTrajectory from_csv(const std::string& text);

  /// Linear interpolation, held constant outside the sampled span. Empty
  /// trajectories report no intruder.
  IntruderState at(Nanos t) const;

  const std::vector<TrajectorySample>& samples() const noexcept { return samples_; }
  Nanos end() const noexcept { return samples_.empty() ? Nanos{0} : samples_.back().t; }

 private:
  std::vector<TrajectorySample> samples_;
};

struct Detection {
  Nanos t_start;
  Nanos t_end;
  double peak_swing;
};

struct DetectorConfig {
  double k = 5.0;
  Nanos window = 250ms;
  Nanos smoothing = 20ms;  // causal moving average ahead of the swing test
};

/// Marks every window whose max-min swing of the smoothed series exceeds
/// k * noise_sigma and merges overlapping marks into detections.
std::vector<Detection> detect_events(const std::vector<double>& samples, Nanos period, double noise_sigma,
                                     const DetectorConfig& cfg = {}, Nanos t0 = Nanos{0});

/// Fraction of samples covered by detections.
double covered_fraction(const std::vector<Detection>& detections, std::size_t samples, Nanos period);

class NotResolvable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Noise left after averaging over a dwell window of `window` at `period`.
double dwell_sigma(double noise_sigma, Nanos window, Nanos period);

/// Smallest outward displacement delta in (0, r] with
/// |swing(r) - swing(r + delta)| >= k * noise_sigma, by bisection.
double tracking_resolution(const SensingModel& model, double noise_sigma, double k, double r);

}  // namespace seth::sensing

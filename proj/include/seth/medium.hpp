#pragma once

#include <span>
#include <stdexcept>
#include <string>

#include "seth/frame_codec.hpp"
#include "seth/rng.hpp"

namespace seth::medium {

using codec::Bitstream;
using codec::Level;

/// 1-D silicone bar. Attenuation is V_ref * exp(-k * distance).
struct SubstrateModel {
  double length_m = 2.0;
  double resistance_per_m = 850.0;
  double v_ref = 1.0;
  double decay_per_m = 0.3;
  double threshold_v = 0.1;
  double noise_sigma = 0.01;
  double sense_error_prob = 0.0;
  double frame_loss_prob = 0.004;
  int burst_min = 20;
  int burst_max = 60;

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
};

class OutOfBounds : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

enum class Busy { Idle, Busy };

inline const char* to_string(Busy b) { return b == Busy::Busy ? "BUSY" : "IDLE"; }

struct Transmitter {
  double position_m;
  Level level;
};

struct Observation {
  double analog_v;
  Busy logical;
};

double rssi(const SubstrateModel& s, double tx_pos, double rx_pos, Level tx_level);

/// Strongest incident carrier plus Gaussian noise. Draws exactly two uniforms
/// from `rng` on every call, even when sigma is zero.
Observation channel_observation(const SubstrateModel& s, std::span<const Transmitter> active, double rx_pos, Rng& rng);

/// Flips the observation with probability `eps`. Always draws one uniform.
Busy sense_with_error(Busy observed, double eps, Rng& rng);

/// With probability frame_loss_prob, inverts one contiguous burst.
Bitstream corrupt_frame(const Bitstream& bits, const SubstrateModel& s, Rng& rng);

}  // namespace seth::medium

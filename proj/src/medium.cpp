#include "seth/medium.hpp"

#include <algorithm>
#include <cmath>

namespace seth::medium {

void SubstrateModel::validate() const {
  auto bad = [](const char* field) { throw std::invalid_argument(field); };
  if (!(length_m > 0)) bad("length_m");
  if (resistance_per_m < 0) bad("resistance_per_m");
  if (!(v_ref > 0)) bad("v_ref");
  if (decay_per_m < 0) bad("decay_per_m");
  if (threshold_v < 0) bad("threshold_v");
  if (noise_sigma < 0) bad("noise_sigma");
  if (sense_error_prob < 0 || sense_error_prob > 1) bad("sense_error_prob");
  if (frame_loss_prob < 0 || frame_loss_prob > 1) bad("frame_loss_prob");
  if (burst_min < 1) bad("burst_min");
  if (burst_max < burst_min) bad("burst_max");
}

double rssi(const SubstrateModel& s, double tx_pos, double rx_pos, Level tx_level) {
  auto in_bounds = [&](double x) { return x >= 0.0 && x <= s.length_m; };
  if (!in_bounds(tx_pos) || !in_bounds(rx_pos)) {
    throw OutOfBounds("position outside [0, " + std::to_string(s.length_m) + "] m");
  }
  if (tx_level == Level::Off) return 0.0;
  return s.v_ref * std::exp(-s.decay_per_m * std::abs(tx_pos - rx_pos));
}

Observation channel_observation(const SubstrateModel& s, std::span<const Transmitter> active, double rx_pos, Rng& rng) {
  double strongest = 0.0;
  for (const auto& t : active) strongest = std::max(strongest, rssi(s, t.position_m, rx_pos, t.level));
  const double analog = strongest + rng.normal(0.0, s.noise_sigma);
  return {analog, analog >= s.threshold_v ? Busy::Busy : Busy::Idle};
}

Busy sense_with_error(Busy observed, double eps, Rng& rng) {
  if (!rng.bernoulli(eps)) return observed;
  return observed == Busy::Busy ? Busy::Idle : Busy::Busy;
}

Bitstream corrupt_frame(const Bitstream& bits, const SubstrateModel& s, Rng& rng) {
  Bitstream out = bits;
  if (bits.empty() || !rng.bernoulli(s.frame_loss_prob)) return out;
  const auto len = std::min<std::int64_t>(rng.uniform_int(s.burst_min, s.burst_max),
                                          static_cast<std::int64_t>(bits.size()));
  const auto offset = rng.uniform_int(0, static_cast<std::int64_t>(bits.size()) - len);
  for (std::int64_t i = offset; i < offset + len; ++i) out[static_cast<std::size_t>(i)] ^= 1;
  return out;
}

}  // namespace seth::medium

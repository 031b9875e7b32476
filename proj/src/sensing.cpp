#include "seth/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <sstream>

namespace seth::sensing {

void SensingModel::validate() const {
  if (!(dv0 > 0)) throw std::invalid_argument("dv0");
  if (!(r0 > 0)) throw std::invalid_argument("r0");
  if (!(alpha > 0)) throw std::invalid_argument("alpha");
  if (squeeze_gain < 0) throw std::invalid_argument("squeeze_gain");
  if (!(g_floor > 0) || g_floor > 1) throw std::invalid_argument("g_floor");
}

double SensingModel::swing(double r, double squeeze) const noexcept {
  return dv0 / (1.0 + std::pow(std::max(r, 0.0) / r0, alpha)) + squeeze_gain * squeeze;
}

double SensingModel::coupling(double along_m, double tx_pos, double rx_pos) const noexcept {
  const double mid = 0.5 * (tx_pos + rx_pos);
  const double half = 0.5 * std::abs(rx_pos - tx_pos);
  if (half == 0.0) return along_m == mid ? 1.0 : g_floor;
  const double u = std::abs(along_m - mid) / half;
  if (u >= 1.0) return g_floor;
  return g_floor + (1.0 - g_floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * u));
}

double perturbed_rssi(double baseline, const SensingModel& model, const IntruderState& intruder, double rx_pos,
                      double tx_pos) {
  if (baseline < 0) throw std::invalid_argument("perturbed_rssi: negative baseline");
  const double g = model.coupling(intruder.along_m, tx_pos, rx_pos);
  return std::max(0.0, baseline - model.swing(intruder.r_m, intruder.squeeze) * g);
}

IntruderTrajectory::IntruderTrajectory(std::vector<TrajectorySample> samples) : samples_(std::move(samples)) {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (i > 0 && s.t <= samples_[i - 1].t) throw TrajectoryError("times must be strictly increasing");
    if (s.state.r_m < 0) throw TrajectoryError("r must be >= 0");
    if (s.state.squeeze < 0) throw TrajectoryError("squeeze must be >= 0");
  }
}

IntruderTrajectory IntruderTrajectory::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<TrajectorySample> samples;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "t_ns,L_m,r_m,squeeze") throw TrajectoryError("line " + std::to_string(lineno) + ": bad header");
      header = true;
      continue;
    }
    std::istringstream row(line);
    long long t;
    double l, r, sq;
    char c1, c2, c3;
    if (!(row >> t >> c1 >> l >> c2 >> r >> c3 >> sq) || c1 != ',' || c2 != ',' || c3 != ',') {
      throw TrajectoryError("line " + std::to_string(lineno) + ": expected t_ns,L_m,r_m,squeeze");
    }
    samples.push_back({Nanos{t}, {l, r, sq}});
  }
  return IntruderTrajectory(std::move(samples));
}

IntruderState IntruderTrajectory::at(Nanos t) const {
  if (samples_.empty()) return {};
  if (t <= samples_.front().t) return samples_.front().state;
  if (t >= samples_.back().t) return samples_.back().state;
  auto hi = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](Nanos v, const TrajectorySample& s) { return v < s.t; });
  auto lo = hi - 1;
  const double w = static_cast<double>((t - lo->t).count()) / static_cast<double>((hi->t - lo->t).count());
  auto lerp = [w](double a, double b) { return a + (b - a) * w; };
  return {lerp(lo->state.along_m, hi->state.along_m), lerp(lo->state.r_m, hi->state.r_m),
          lerp(lo->state.squeeze, hi->state.squeeze)};
}

std::vector<Detection> detect_events(const std::vector<double>& samples, Nanos period, double noise_sigma,
                                     const DetectorConfig& cfg, Nanos t0) {
  if (!(cfg.k > 0)) throw std::invalid_argument("detect_events: k must be > 0");
  if (period <= Nanos{0}) throw std::invalid_argument("detect_events: period must be > 0");
  std::vector<Detection> out;
  if (samples.empty()) return out;

  const auto smooth_n = static_cast<std::size_t>(std::max<std::int64_t>(1, cfg.smoothing / period));
  const auto window_n = static_cast<std::size_t>(std::max<std::int64_t>(1, cfg.window / period));
  const double threshold = cfg.k * noise_sigma;

  std::vector<double> smoothed(samples.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    acc += samples[i];
    if (i >= smooth_n) acc -= samples[i - smooth_n];
    smoothed[i] = acc / static_cast<double>(std::min(i + 1, smooth_n));
  }

  std::deque<std::size_t> maxq, minq;
  for (std::size_t i = 0; i < smoothed.size(); ++i) {
    while (!maxq.empty() && smoothed[maxq.back()] <= smoothed[i]) maxq.pop_back();
    while (!minq.empty() && smoothed[minq.back()] >= smoothed[i]) minq.pop_back();
    maxq.push_back(i);
    minq.push_back(i);
    const std::size_t first = i + 1 >= window_n ? i + 1 - window_n : 0;
    while (maxq.front() < first) maxq.pop_front();
    while (minq.front() < first) minq.pop_front();

    const double range = smoothed[maxq.front()] - smoothed[minq.front()];
    if (range <= threshold) continue;
    const Nanos a = t0 + period * static_cast<std::int64_t>(first);
    const Nanos b = t0 + period * static_cast<std::int64_t>(i);
    if (!out.empty() && a <= out.back().t_end) {
      out.back().t_end = b;
      out.back().peak_swing = std::max(out.back().peak_swing, range);
    } else {
      out.push_back({a, b, range});
    }
  }
  return out;
}

double covered_fraction(const std::vector<Detection>& detections, std::size_t samples, Nanos period) {
  if (samples == 0) return 0.0;
  std::size_t covered = 0;
  for (const auto& d : detections) covered += static_cast<std::size_t>((d.t_end - d.t_start) / period) + 1;
  return static_cast<double>(covered) / static_cast<double>(samples);
}

double dwell_sigma(double noise_sigma, Nanos window, Nanos period) {
  const double n = static_cast<double>(window.count()) / static_cast<double>(period.count());
  return noise_sigma / std::sqrt(std::max(n, 1.0));
}

double tracking_resolution(const SensingModel& model, double noise_sigma, double k, double r) {
  if (r < 0) throw std::invalid_argument("tracking_resolution: r < 0");
  if (noise_sigma == 0.0) return 0.0;
  const double threshold = k * noise_sigma;
  auto change = [&](double delta) { return std::abs(model.swing(r) - model.swing(r + delta)); };
  if (r == 0.0 || change(r) < threshold) {
    throw NotResolvable("movement at r = " + std::to_string(r) + " m stays below threshold");
  }
  double lo = 0.0, hi = r;
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (change(mid) >= threshold ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace seth::sensing

#include "seth/energy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace seth {

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::Off: return "OFF";
    case Mode::Harvest: return "HARVEST";
    case Mode::Listen: return "LISTEN";
    case Mode::TxPreamble: return "TX_PREAMBLE";
    case Mode::ArbCheck: return "ARB_CHECK";
    case Mode::TxFrame: return "TX_FRAME";
    case Mode::RxFrame: return "RX_FRAME";
    case Mode::Sense: return "SENSE";
  }
  return "?";
}

double LoadCurrents::for_mode(Mode m) const noexcept {
  switch (m) {
    case Mode::Off: return off;
    case Mode::Harvest: return harvest;
    case Mode::Listen: return listen;
    case Mode::TxPreamble:
    case Mode::TxFrame: return tx;
    case Mode::ArbCheck:
    case Mode::RxFrame: return rx;
    case Mode::Sense: return sense;
  }
  return 0.0;
}

}  // namespace seth

namespace seth::energy {

void HarvesterModel::validate() const {
  if (!(v_inf >= 0)) throw std::invalid_argument("v_inf");
  if (!(r_s > 0)) throw std::invalid_argument("r_s");
  if (!(i_leak >= 0)) throw std::invalid_argument("i_leak");
}

double steady_state(const HarvesterModel& h, double capacitance, double i_load) noexcept {
  return h.v_inf - h.r_s * (i_load + h.leak_at(capacitance));
}

EnergyState energy_step(EnergyState s, Mode mode, const HarvesterModel& h, const StorageConfig& cfg, Nanos dt,
                        bool carrier_on) {
  if (dt < Nanos{0}) throw std::invalid_argument("energy_step: negative dt");
  if (dt == Nanos{0}) return s;
  const double t = to_seconds(dt);
  const double c = cfg.capacitance;
  const double load = cfg.loads.for_mode(mode) + h.leak_at(c);
  double v;
  if (harvests(mode) && carrier_on) {
    const double v_ss = h.v_inf - h.r_s * load;
    v = v_ss + (s.v_cap - v_ss) * std::exp(-t / (h.r_s * c));
  } else {
    v = s.v_cap - load * t / c;
  }
  s.v_cap = std::max(v, 0.0);
  if (!s.alive && s.v_cap >= cfg.v_on) s.alive = true;
  else if (s.alive && s.v_cap < cfg.v_off) s.alive = false;
  return s;
}

std::optional<double> time_to_voltage(const HarvesterModel& h, double capacitance, double i_load, double from_v,
                                      double to_v, bool harvesting) {
  if (from_v < 0) throw std::invalid_argument("time_to_voltage: from_v < 0");
  if (from_v == to_v) return 0.0;
  const double load = i_load + h.leak_at(capacitance);
  if (harvesting) {
    const double v_ss = h.v_inf - h.r_s * load;
    const double a = from_v - v_ss;
    const double b = to_v - v_ss;
    // Reachable only on the way towards v_ss, never at or beyond it.
    if (a == 0 || b == 0 || (a > 0) != (b > 0) || std::abs(b) >= std::abs(a)) return std::nullopt;
    return h.r_s * capacitance * std::log(a / b);
  }
  if (to_v > from_v || load <= 0) return std::nullopt;
  return capacitance * (from_v - to_v) / load;
}

namespace {

constexpr double kNeverPenalty = 1e6;
constexpr double kLeakFloor = 1e-12;

struct Params {
  double drive, r_s, leak;
};

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo * std::pow(hi / lo, n == 1 ? 0.0 : double(i) / (n - 1)));
  return v;
}

HarvesterModel to_model(const Params& p) { return {p.drive * p.r_s, p.r_s, p.leak <= kLeakFloor ? 0.0 : p.leak}; }

double objective(const Params& p, const std::vector<ChargeObservation>& obs, const FitOptions& opt,
                 std::vector<double>* residuals = nullptr) {
  const HarvesterModel m = to_model(p);
  double sse = 0.0;
  if (residuals) residuals->clear();
  for (const auto& o : obs) {
    const auto t = time_to_voltage(m, o.capacitance, opt.i_load, 0.0, opt.target_v);
    const double r = t ? (*t - o.seconds) / o.seconds : kNeverPenalty;
    if (residuals) residuals->push_back(r);
    sse += t ? r * r : kNeverPenalty;
  }
  return sse;
}

}  // namespace

FitResult fit_harvester(const std::vector<ChargeObservation>& obs, const FitOptions& opt) {
  if (obs.empty()) throw std::invalid_argument("fit_harvester: no observations");
  for (const auto& o : obs) {
    if (!(o.capacitance > 0) || !(o.seconds > 0)) throw std::invalid_argument("fit_harvester: bad observation");
  }

  const auto drives = logspace(1e-6, 1e-1, 26);
  const auto r_grid = opt.pinned_r_s ? std::vector<double>{*opt.pinned_r_s} : logspace(1e2, 1e7, 26);
  std::vector<double> l_grid;
  if (opt.pinned_i_leak) {
    l_grid = {std::max(*opt.pinned_i_leak, kLeakFloor)};
  } else {
    l_grid = logspace(1e-9, 1e-3, 13);
    l_grid.insert(l_grid.begin(), kLeakFloor);
  }

  Params best{drives[0], r_grid[0], l_grid[0]};
  double best_f = std::numeric_limits<double>::infinity();
  for (double r : r_grid) {
    for (double l : l_grid) {
      for (double d : drives) {
        const Params p{d, r, l};
        const double f = objective(p, obs, opt);
        if (f < best_f) {
          best_f = f;
          best = p;
        }
      }
    }
  }

  // Hooke-Jeeves pattern search in log space over the free coordinates.
  std::array<double, 3> x{std::log(best.drive), std::log(best.r_s), std::log(best.leak)};
  const std::array<bool, 3> free{true, !opt.pinned_r_s, !opt.pinned_i_leak};
  auto unpack = [&](const std::array<double, 3>& y) {
    return Params{std::exp(y[0]), std::exp(y[1]), std::exp(std::max(y[2], std::log(kLeakFloor)))};
  };
  auto eval = [&](const std::array<double, 3>& y) { return objective(unpack(y), obs, opt); };
  auto explore = [&](std::array<double, 3> base, double& f, double step) {
    for (int i = 0; i < 3; ++i) {
      if (!free[static_cast<std::size_t>(i)]) continue;
      for (double dir : {+1.0, -1.0}) {
        auto y = base;
        y[static_cast<std::size_t>(i)] += dir * step;
        const double fy = eval(y);
        if (fy < f) {
          f = fy;
          base = y;
          break;
        }
      }
    }
    return base;
  };

  double step = 0.25;
  double fx = eval(x);
  for (int it = 0; it < opt.budget && step > 1e-12 && fx > 0; ++it) {
    double fy = fx;
    auto y = explore(x, fy, step);
    if (fy < fx) {
      // Keep moving in the direction that just paid off.
      while (true) {
        std::array<double, 3> pattern{};
        for (int i = 0; i < 3; ++i) pattern[i] = y[i] + (y[i] - x[i]);
        x = y;
        fx = fy;
        double fz = eval(pattern);
        auto z = explore(pattern, fz, step);
        if (fz >= fx) break;
        y = z;
        fy = fz;
      }
    } else {
      step *= 0.5;
    }
  }

  FitResult result;
  const Params p = unpack(x);
  result.model = to_model(p);
  result.objective = objective(p, obs, opt, &result.residuals);
  for (double r : result.residuals) {
    if (std::abs(r) > opt.max_residual) {
      throw FitDiverged("fit_harvester: residual " + std::to_string(r) + " exceeds " + std::to_string(opt.max_residual));
    }
  }
  return result;
}

double sustainable_packet_rate(const HarvesterModel& h, double capacitance, double e_pkt, double active_s,
                               double i_idle, double v_op) {
  if (!(e_pkt > 0)) throw std::invalid_argument("sustainable_packet_rate: e_pkt must be > 0");
  const double supply = (h.v_inf - v_op) / h.r_s;
  const double net = supply - i_idle - h.leak_at(capacitance);
  if (net <= 0) return 0.0;
  return v_op * net / (e_pkt + v_op * active_s * (supply - i_idle));
}

double simulated_packet_rate(const HarvesterModel& h, const StorageConfig& cfg, double active_s, int packets) {
  const double c = cfg.capacitance;
  const double drain = cfg.loads.tx + h.leak_at(c);
  double elapsed = 0.0;
  for (int i = 0; i < packets; ++i) {
    const double v = std::max(cfg.v_on - drain * active_s / c, 0.0);
    const auto recover = time_to_voltage(h, c, cfg.loads.harvest, v, cfg.v_on, true);
    if (!recover) return 0.0;
    elapsed += active_s + *recover;
  }
  return elapsed > 0 ? packets / elapsed : 0.0;
}

}  // namespace seth::energy

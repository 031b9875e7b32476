#include "seth/report.hpp"

#include <cmath>
#include <cstdio>

namespace seth::report {

std::string fixed(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);  // no "-0.00"
  return s;
}

std::string frames_csv(const Metrics& m) {
  std::string out = "enqueue_ns,deliver_ns,src,dst,priority,crc_ok,winner_correct\n";
  for (const auto& f : m.frames) {
    out += std::to_string(f.enqueue.count()) + ',' + std::to_string(f.deliver.count()) + ',' + std::to_string(f.src) +
           ',' + std::to_string(f.dst) + ',' + std::to_string(f.priority) + ',' + (f.crc_ok ? '1' : '0') + ',' +
           (f.winner_correct ? '1' : '0') + '\n';
  }
  return out;
}

std::string energy_csv(const Metrics& m) {
  std::string out = "time_ns,node_id,v_cap,mode\n";
  for (const auto& e : m.energy) {
    out += std::to_string(e.t.count()) + ',' + std::to_string(e.node) + ',' + fixed(e.v_cap, 6) + ',' +
           std::string(to_string(e.mode)) + '\n';
  }
  return out;
}

std::string sensing_csv(const Metrics& m) {
  std::string out = "t_ns,volts\n";
  for (const auto& s : m.sensing) out += std::to_string(s.t.count()) + ',' + fixed(s.volts, 6) + '\n';
  return out;
}

std::string detections_csv(const std::vector<sensing::Detection>& d) {
  std::string out = "t_start_ns,t_end_ns,peak_swing_v\n";
  for (const auto& x : d) {
    out += std::to_string(x.t_start.count()) + ',' + std::to_string(x.t_end.count()) + ',' + fixed(x.peak_swing, 6) +
           '\n';
  }
  return out;
}

std::string trials_csv(const Metrics& m) {
  std::string out = "start_ns,contenders,expected_src,first_src,crc_ok\n";
  for (const auto& t : m.trials) {
    out += std::to_string(t.start.count()) + ',' + std::to_string(t.contenders) + ',' +
           std::to_string(t.expected_src) + ',' + std::to_string(t.first_src) + ',' + (t.crc_ok ? '1' : '0') + '\n';
  }
  return out;
}

SummaryRow point(std::string metric, double value, int decimals) {
  return {std::move(metric), value, value, value, decimals};
}

SummaryRow with_ci(std::string metric, const Estimate& e, int decimals) {
  return {std::move(metric), e.mean, e.ci_low, e.ci_high, decimals};
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "metric,value,ci_low,ci_high\n";
  for (const auto& r : rows) {
    out += r.metric + ',' + fixed(r.value, r.decimals) + ',' + fixed(r.ci_low, r.decimals) + ',' +
           fixed(r.ci_high, r.decimals) + '\n';
  }
  return out;
}

}  // namespace seth::report

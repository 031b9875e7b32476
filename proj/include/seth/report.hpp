#pragma once

// CSV emission. Voltages carry 6 decimals, reliabilities 4, times are integer
// nanoseconds, so equal runs give byte-identical files.

#include <string>
#include <vector>

#include "seth/engine.hpp"

namespace seth::report {

std::string fixed(double v, int decimals);

std::string frames_csv(const Metrics& m);
std::string energy_csv(const Metrics& m);
std::string sensing_csv(const Metrics& m);
std::string detections_csv(const std::vector<sensing::Detection>& d);
std::string trials_csv(const Metrics& m);

struct SummaryRow {
  std::string metric;
  double value;
  double ci_low;
  double ci_high;
  int decimals = 4;
};

SummaryRow point(std::string metric, double value, int decimals = 4);
SummaryRow with_ci(std::string metric, const Estimate& e, int decimals = 4);

std::string summary_csv(const std::vector<SummaryRow>& rows);

}  // namespace seth::report

#pragma once

#include <chrono>
#include <cstdint>

namespace seth {

// Every duration and timestamp in the simulator is an integer count of
// nanoseconds since the start of a run.
using Nanos = std::chrono::nanoseconds;

using namespace std::chrono_literals;

constexpr double to_seconds(Nanos t) noexcept {
  return static_cast<double>(t.count()) * 1e-9;
}

constexpr Nanos from_seconds(double s) noexcept {
  return Nanos{static_cast<std::int64_t>(s * 1e9 + (s >= 0 ? 0.5 : -0.5))};
}

}  // namespace seth

#include <doctest.h>

#include <cmath>
#include <vector>

#include "seth/medium.hpp"

using namespace seth;
using namespace seth::medium;
using codec::Level;

TEST_CASE("rssi closed form") {
  const SubstrateModel s;
  CHECK(rssi(s, 0.7, 0.7, Level::On) == doctest::Approx(1.0));
  CHECK(rssi(s, 0.0, 2.0, Level::Off) == 0.0);
  CHECK(rssi(s, 0.0, 2.0, Level::On) == doctest::Approx(std::exp(-0.6)));
  CHECK(rssi(s, 0.0, 2.0, Level::On) >= s.threshold_v);
  CHECK_THROWS_AS(rssi(s, -0.01, 1.0, Level::On), OutOfBounds);
  CHECK_THROWS_AS(rssi(s, 0.0, 2.01, Level::On), OutOfBounds);
}

TEST_CASE("rssi is non-increasing in distance on a 1 cm grid") {
  const SubstrateModel s;
  double prev = rssi(s, 0.0, 0.0, Level::On);
  for (int cm = 1; cm <= 200; ++cm) {
    const double v = rssi(s, 0.0, cm / 100.0, Level::On);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("channel observation follows the max rule") {
  SubstrateModel s;
  s.noise_sigma = 0;
  Rng rng(1);
  CHECK(channel_observation(s, {}, 1.0, rng).logical == Busy::Idle);
  CHECK(channel_observation(s, {}, 1.0, rng).analog_v == 0.0);

  const std::vector<Transmitter> one{{1.0, Level::On}};
  const auto o1 = channel_observation(s, one, 1.0, rng);
  CHECK(o1.analog_v == doctest::Approx(1.0));
  CHECK(o1.logical == Busy::Busy);

  const std::vector<Transmitter> two{{0.0, Level::On}, {1.5, Level::On}};
  const auto o2 = channel_observation(s, two, 1.8, rng);
  CHECK(o2.analog_v == doctest::Approx(std::max(rssi(s, 0.0, 1.8, Level::On), rssi(s, 1.5, 1.8, Level::On))));

  const std::vector<Transmitter> off{{1.0, Level::Off}};
  CHECK(channel_observation(s, off, 1.0, rng).logical == Busy::Idle);
}

TEST_CASE("a single transmitter is heard at every pair of positions") {
  const SubstrateModel s;
  Rng rng(8);
  for (int a = 0; a <= 20; ++a) {
    for (int b = 0; b <= 20; ++b) {
      const std::vector<Transmitter> tx{{a / 10.0, Level::On}};
      CHECK(channel_observation(s, tx, b / 10.0, rng).logical == Busy::Busy);
    }
  }
}

TEST_CASE("sense_with_error flip rate") {
  Rng rng(123);
  CHECK(sense_with_error(Busy::Busy, 0.0, rng) == Busy::Busy);
  CHECK(sense_with_error(Busy::Idle, 1.0, rng) == Busy::Busy);
  CHECK(sense_with_error(Busy::Busy, 1.0, rng) == Busy::Idle);
  int flips = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) flips += sense_with_error(Busy::Idle, 0.02, rng) == Busy::Busy;
  CHECK(std::abs(flips / double(n) - 0.02) <= 0.003);
}

TEST_CASE("corrupt_frame statistics and determinism") {
  SubstrateModel s;
  const codec::Bitstream bits(64, 0);
  Rng rng(9);
  s.frame_loss_prob = 0;
  CHECK(corrupt_frame(bits, s, rng) == bits);

  s.frame_loss_prob = 0.004;
  int corrupted = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto out = corrupt_frame(bits, s, rng);
    int flipped = 0;
    int first = -1, last = -1;
    for (int k = 0; k < 64; ++k) {
      if (out[static_cast<std::size_t>(k)]) {
        ++flipped;
        if (first < 0) first = k;
        last = k;
      }
    }
    if (flipped) {
      ++corrupted;
      CHECK(flipped >= s.burst_min);
      CHECK(flipped <= s.burst_max);
      CHECK(last - first + 1 == flipped);  // contiguous
    }
  }
  CHECK(std::abs(corrupted / double(n) - 0.004) <= 0.0006);

  Rng a(77), b(77);
  s.frame_loss_prob = 0.5;
  for (int i = 0; i < 100; ++i) CHECK(corrupt_frame(bits, s, a) == corrupt_frame(bits, s, b));
}

TEST_CASE("substrate validation names the field") {
  SubstrateModel s;
  s.burst_max = 10;
  try {
    s.validate();
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()) == "burst_max");
  }
  s = SubstrateModel{};
  s.sense_error_prob = 1.5;
  CHECK_THROWS(s.validate());
}

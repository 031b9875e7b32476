#include <doctest.h>

#include <cmath>

#include "seth/neuron.hpp"
#include "seth/rng.hpp"
#include "seth/sensing.hpp"

using namespace seth;
using namespace seth::sensing;

TEST_CASE("swing closed form and limits") {
  const SensingModel m;
  CHECK(m.swing(0.0) == doctest::Approx(0.3));
  CHECK(m.swing(0.05) == doctest::Approx(0.15));
  CHECK(m.swing(1.0) == doctest::Approx(0.3 / 401.0));
  CHECK(m.swing(0.0, 1.0) == doctest::Approx(0.4));
  CHECK(perturbed_rssi(0.5, m, IntruderState{1.0, 1e9, 0.0}, 2.0, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(perturbed_rssi(0.5, m, IntruderState{1.0, 0.0, 0.0}, 2.0, 0.0) == doctest::Approx(0.2));
  CHECK(perturbed_rssi(0.1, m, IntruderState{1.0, 0.0, 5.0}, 2.0, 0.0) == 0.0);
  CHECK_THROWS(perturbed_rssi(-0.1, m, {}, 2.0, 0.0));
}

TEST_CASE("perturbation strictly decreases with distance and increases with squeeze") {
  const SensingModel m;
  for (int i = 0; i < 200; ++i) CHECK(m.swing(i / 200.0) > m.swing((i + 1) / 200.0));
  for (int i = 0; i < 20; ++i) CHECK(m.swing(0.0, i / 10.0) < m.swing(0.0, (i + 1) / 10.0));
}

TEST_CASE("coupling is a normalized positive bump") {
  const SensingModel m;
  double peak = 0;
  for (int i = 0; i <= 200; ++i) {
    const double g = m.coupling(i / 100.0, 0.0, 2.0);
    CHECK(g >= m.g_floor);
    CHECK(g <= 1.0);
    peak = std::max(peak, g);
  }
  CHECK(peak == doctest::Approx(1.0));
  CHECK(m.coupling(1.0, 0.0, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("trajectory csv and interpolation") {
  const auto tr = IntruderTrajectory::from_csv("# comment\nt_ns,L_m,r_m,squeeze\n0,1.0,0.4,0\n1000,1.5,0.0,2\n");
  CHECK(tr.at(Nanos{-5}).r_m == doctest::Approx(0.4));
  CHECK(tr.at(Nanos{500}).along_m == doctest::Approx(1.25));
  CHECK(tr.at(Nanos{500}).squeeze == doctest::Approx(1.0));
  CHECK(tr.at(Nanos{5000}).r_m == 0.0);
  CHECK(tr.end() == Nanos{1000});
  CHECK_THROWS_AS(IntruderTrajectory::from_csv("t,L,r,s\n0,1,1,0\n"), TrajectoryError);
  CHECK_THROWS_AS(IntruderTrajectory::from_csv("t_ns,L_m,r_m,squeeze\n5,1,1,0\n5,1,1,0\n"), TrajectoryError);
  CHECK_THROWS_AS(IntruderTrajectory::from_csv("t_ns,L_m,r_m,squeeze\n5,1,-1,0\n"), TrajectoryError);
  CHECK(IntruderTrajectory{}.at(Nanos{0}).r_m > 1e6);
}

TEST_CASE("detector on constant, step and noise") {
  const Nanos period = 1ms;
  const double sigma = 0.01;
  CHECK(detect_events(std::vector<double>(2000, 0.5), period, sigma).empty());

  std::vector<double> step(2000, 0.5);
  for (std::size_t i = 1000; i < step.size(); ++i) step[i] = 0.5 - 6 * sigma;
  const auto d = detect_events(step, period, sigma);
  REQUIRE(d.size() == 1);
  CHECK(d[0].t_start <= d[0].t_end);
  CHECK(d[0].peak_swing >= 5 * sigma);

  Rng rng(31337);
  std::vector<double> noise(100000);
  for (auto& v : noise) v = 0.5 + rng.normal(0.0, sigma);
  const auto fp = detect_events(noise, period, sigma);
  CHECK(covered_fraction(fp, noise.size(), period) < 1e-3);
}

TEST_CASE("tracking resolution") {
  const SensingModel m;
  CHECK(tracking_resolution(m, 0.0, 5.0, 0.1) == 0.0);
  const double sigma = dwell_sigma(0.01, 250ms, 1ms);
  CHECK(sigma == doctest::Approx(0.01 / std::sqrt(250.0)));
  const double r10 = tracking_resolution(m, sigma, 5.0, 0.10);
  CHECK(r10 <= 0.01);
  CHECK(std::abs(m.swing(0.10) - m.swing(0.10 + r10)) == doctest::Approx(5 * sigma).epsilon(1e-6));
  CHECK_THROWS_AS(tracking_resolution(m, 0.01, 5.0, 0.0), NotResolvable);
  CHECK_THROWS_AS(tracking_resolution(m, 0.01, 5.0, 1.0), NotResolvable);

  // Monotone beyond the inflection point of the swing curve.
  const double inflection = m.r0 * std::pow((m.alpha - 1) / (m.alpha + 1), 1 / m.alpha);
  double prev = 0;
  for (double r = std::ceil(inflection * 100) / 100; r <= 1.0 + 1e-9; r += 0.01) {
    double d = 0;
    try {
      d = tracking_resolution(m, sigma, 5.0, r);
    } catch (const NotResolvable&) {
      break;
    }
    CHECK(d >= prev);
    prev = d;
  }
}

TEST_CASE("sense_sample") {
  const medium::SubstrateModel quiet = [] {
    medium::SubstrateModel s;
    s.noise_sigma = 0;
    return s;
  }();
  const SensingModel m;
  Rng rng(4);
  const std::vector<medium::Transmitter> tx{{0.0, codec::Level::On}};
  const double base = medium::rssi(quiet, 0.0, 2.0, codec::Level::On);
  CHECK(sense_sample(2.0, quiet, tx, m, {}, rng) == doctest::Approx(base));
  const double touched = sense_sample(2.0, quiet, tx, m, {1.5, 0.0, 0.0}, rng);
  CHECK(base - touched >= 0.1);
  CHECK_THROWS_AS(sense_sample(2.0, quiet, {}, m, {}, rng), NoCarrier);

  const medium::SubstrateModel noisy;
  Rng a(5), b(5);
  for (int i = 0; i < 50; ++i) CHECK(sense_sample(2.0, noisy, tx, m, {}, a) == sense_sample(2.0, noisy, tx, m, {}, b));
}

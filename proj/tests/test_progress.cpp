#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "phasor/progress.hpp"

using namespace phasor;

TEST_CASE("window comparison emits the mean improvement as a pulse") {
  ProgressDetector::Params p;
  p.window_len = 2;
  p.stride = 2;
  p.threshold = 0.05;
  p.refractory = 1;
  ProgressDetector d(p);
  CHECK(!d.observe(0, 1.0));
  CHECK(!d.observe(1, 1.0));
  CHECK(!d.observe(2, 0.8));
  const auto pulse = d.observe(3, 0.8);
  REQUIRE(pulse.has_value());
  CHECK(*pulse == doctest::Approx(0.2));  // (1.0 + 1.0)/2 - (0.8 + 0.8)/2
  CHECK(d.last_delta() == doctest::Approx(0.2));
}

TEST_CASE("constant loss never emits") {
  ProgressDetector d({});
  for (long t = 0; t < 500; ++t) CHECK(!d.observe(t, 0.7));
}

TEST_CASE("pulse amplitude is gain-scaled and capped") {
  ProgressDetector::Params p;
  p.window_len = 1;
  p.stride = 1;
  p.threshold = 0.0;
  p.refractory = 1;
  p.pulse_gain = 3.0;
  p.pulse_cap = 0.5;
  ProgressDetector d(p);
  CHECK(!d.observe(0, 1.0));
  const auto small = d.observe(1, 0.9);
  REQUIRE(small.has_value());
  CHECK(*small == doctest::Approx(0.3));  // gain 3 * delta 0.1
  const auto capped = d.observe(2, 0.0);
  REQUIRE(capped.has_value());
  CHECK(*capped == doctest::Approx(0.5));  // 3 * 0.9 hits the cap
}

TEST_CASE("refractory period limits the emission rate") {
  ProgressDetector::Params p;
  p.window_len = 5;
  p.stride = 1;
  p.threshold = 0.0;
  p.refractory = 30;
  ProgressDetector d(p);
  int pulses = 0;
  double loss = 10.0;
  for (long t = 0; t < 90; ++t) {
    loss *= 0.95;  // steadily improving: eligible at every evaluation
    if (d.observe(t, loss)) ++pulses;
  }
  CHECK(pulses == 3);  // 90 steps / 30-step refractory
}

TEST_CASE("negative or non-finite loss is rejected") {
  ProgressDetector d({});
  CHECK_THROWS_AS(d.observe(0, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(d.observe(0, std::nan("")), std::invalid_argument);
}

TEST_CASE("invalid parameters are rejected") {
  ProgressDetector::Params p;
  p.window_len = 0;
  CHECK_THROWS_AS(ProgressDetector{p}, std::invalid_argument);
}

TEST_CASE("shuffle keeps the amplitude multiset at distinct resampled times") {
  Rng rng = make_stream("progress", 0, "shuffle");
  std::vector<Pulse> pulses;
  for (long i = 0; i < 40; ++i) pulses.push_back({i * 25, 0.01 * i});
  const auto shuffled = shuffle_schedule(pulses, 1000, rng);
  REQUIRE(shuffled.size() == pulses.size());
  std::multiset<double> amps_in, amps_out;
  std::set<long> times;
  for (const auto& p : pulses) amps_in.insert(p.amplitude);
  long prev = -1;
  for (const auto& p : shuffled) {
    amps_out.insert(p.amplitude);
    CHECK(p.step >= 0);
    CHECK(p.step < 1000);
    CHECK(p.step > prev);  // sorted and distinct
    prev = p.step;
    times.insert(p.step);
  }
  CHECK(amps_in == amps_out);
  CHECK(times.size() == pulses.size());
  // The time assignment actually moves pulses.
  int moved = 0;
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    if (shuffled[i].amplitude != pulses[i].amplitude ||
        shuffled[i].step != pulses[i].step) {
      ++moved;
    }
  }
  CHECK(moved > 0);

  CHECK(shuffle_schedule({}, 100, rng).empty());
  std::vector<Pulse> too_many(10, Pulse{0, 1.0});
  CHECK_THROWS_AS(shuffle_schedule(too_many, 5, rng), std::invalid_argument);
}

#include "doctest.h"
#include "helpers.hpp"
#include "stirap/error.hpp"
#include "stirap/pulse.hpp"

using namespace stirap;

TEST_CASE("gaussian envelope and derivative") {
  GaussianPulse g;
  g.amplitude = 0.3;
  g.center = 12.0;
  g.width = 20.0;
  CHECK(gaussian_envelope(12.0, g) == doctest::Approx(0.3));
  CHECK(gaussian_envelope(32.0, g) == doctest::Approx(0.3 * std::exp(-0.5)));
  for (double t : {-30.0, 0.0, 11.0, 40.0}) {
    const double h = 1e-4;
    const double fd = (gaussian_envelope(t + h, g) - gaussian_envelope(t - h, g)) / (2 * h);
    CHECK(gaussian_envelope_derivative(t, g) == doctest::Approx(fd).epsilon(1e-7));
  }
  g.width = 0.0;
  CHECK_THROWS_AS(gaussian_envelope(0.0, g), InvalidPulseError);
}

TEST_CASE("two-pulse layout puts the 12 peak at t_s/2 and the 01 peak at -t_s/2") {
  const SequenceParams p = testing::paper_pulses();
  const PulseSequence seq = build_sequence(SequenceKind::Stirap, p);
  CHECK(seq.reference_time() == doctest::Approx(45.0));
  CHECK(seq.sample(45.0).omega01 == doctest::Approx(p.omega01));
  CHECK(seq.sample(-45.0).omega12 == doctest::Approx(p.omega12));
  CHECK(seq.t_start() <= -45.0 - 4 * 45.0);
  CHECK(seq.t_end() >= 45.0 + 4 * 45.0);
  CHECK(seq.min_width() == 45.0);
  CHECK(seq.gaussian_count() == 2);
}

TEST_CASE("sequence ordering rules") {
  SequenceParams p = testing::paper_pulses();
  p.separation = 30.0;
  CHECK_THROWS_AS(build_sequence(SequenceKind::Stirap, p), ConfigError);
  CHECK_NOTHROW(build_sequence(SequenceKind::Intuitive, p));
  CHECK_NOTHROW(build_two_pulse(p));
  p.separation = -30.0;
  CHECK_THROWS_AS(build_sequence(SequenceKind::Intuitive, p), ConfigError);
  p.sigma = -1.0;
  CHECK_THROWS_AS(build_two_pulse(p), InvalidPulseError);
  p.sigma = 45.0;
  p.omega01 = -1.0;
  CHECK_THROWS_AS(build_two_pulse(p), InvalidPulseError);
}

TEST_CASE("window must cover every pulse") {
  GaussianPulse g;
  g.amplitude = 0.1;
  g.width = 10.0;
  CHECK_THROWS_AS(PulseSequence({g}, 0.0, -20.0, 60.0), ConfigError);
  CHECK_NOTHROW(PulseSequence({g}, 0.0, -40.0, 40.0));
}

TEST_CASE("hybrid places the fast pulse just before the pair") {
  SequenceParams p = testing::paper_pulses();
  p.theta_fast = std::numbers::pi / 2;
  p.fast_duration = 10.0;
  const PulseSequence pair = build_two_pulse(p);
  const PulseSequence seq = build_sequence(SequenceKind::Hybrid, p);
  CHECK(seq.t_start() == doctest::Approx(pair.t_start() - 10.0));
  const auto& fast = std::get<FastPulse>(seq.pulses().front());
  CHECK(fast.amplitude() * fast.duration == doctest::Approx(std::numbers::pi / 2));
  CHECK(seq.sample(seq.t_start() + 5.0).omega01 == doctest::Approx(fast.amplitude()).epsilon(1e-6));
}

TEST_CASE("reversal layout") {
  const SequenceParams p = testing::paper_pulses();
  const PulseSequence seq = build_sequence(SequenceKind::Reversal, p);
  CHECK(seq.pulses().size() == 3);
  CHECK(seq.reference_time() == 0.0);
  // Each 12 peak carries the e^{-8} tail of its partner 180 ns away.
  CHECK(seq.sample(-90.0).omega12 == doctest::Approx(p.omega12 * (1 + std::exp(-8.0))).epsilon(1e-9));
  CHECK(seq.sample(90.0).omega12 == doctest::Approx(p.omega12 * (1 + std::exp(-8.0))).epsilon(1e-9));
}

TEST_CASE("local adiabaticity equals |dtheta/dt| / Omega_rms") {
  const PulseSequence seq = build_sequence(SequenceKind::Stirap, testing::paper_pulses());
  auto theta = [&](double t) {
    const auto s = seq.sample(t);
    return std::atan2(s.omega01, s.omega12);
  };
  for (double t : {-80.0, -20.0, 0.0, 30.0, 90.0}) {
    const double h = 1e-3;
    const double dth = (theta(t + h) - theta(t - h)) / (2 * h);
    const auto s = seq.sample(t);
    const double oracle = std::abs(dth) / std::hypot(s.omega01, s.omega12);
    CHECK(local_adiabaticity(t, seq) == doctest::Approx(oracle).epsilon(1e-6));
  }
  CHECK_THROWS_AS(local_adiabaticity(1e4, seq), SingularPointError);
}

TEST_CASE("global adiabaticity metric") {
  const PulseSequence seq = build_sequence(SequenceKind::Stirap, testing::paper_pulses());
  const double omega_cyc = std::sqrt(43.4 * 38.2) * 1e-3;
  const AdiabaticityReport cyc = global_adiabaticity_metric(seq, FrequencyConvention::Cyclic);
  CHECK(cyc.global_metric == doctest::Approx(4.0 / std::sqrt(std::numbers::pi) * 45.0 * omega_cyc));
  CHECK(cyc.satisfied);
  const AdiabaticityReport ang = global_adiabaticity_metric(seq, FrequencyConvention::Angular);
  CHECK(ang.global_metric == doctest::Approx(2 * std::numbers::pi * cyc.global_metric));
  CHECK(ang.area_within_bounds);
  CHECK(ang.rms_area >= ang.area_lower * (1 - 1e-4));
  CHECK(ang.rms_area <= ang.area_upper * (1 + 1e-4));

  // At t_s = 0 with equal amplitudes the rms area equals the lower endpoint.
  SequenceParams p = testing::paper_pulses();
  p.separation = 0.0;
  p.omega12 = p.omega01;
  const AdiabaticityReport zero = global_adiabaticity_metric(build_two_pulse(p), FrequencyConvention::Angular);
  CHECK(zero.rms_area == doctest::Approx(zero.area_lower).epsilon(1e-8));

  CHECK_THROWS_AS(global_adiabaticity_metric(build_sequence(SequenceKind::Reversal, testing::paper_pulses())),
                  ConfigError);
}

TEST_CASE("phase sweep ramps smoothly between start and stop") {
  PhaseSweep s{10.0, 50.0, std::numbers::pi};
  CHECK(s.offset(0.0) == 0.0);
  CHECK(s.offset(10.0) == doctest::Approx(0.0));
  CHECK(s.offset(30.0) == doctest::Approx(std::numbers::pi / 2));
  CHECK(s.offset(50.0) == doctest::Approx(std::numbers::pi));
  CHECK(s.offset(80.0) == doctest::Approx(std::numbers::pi));
  for (double t : {15.0, 30.0, 44.0}) {
    const double fd = (s.offset(t + 1e-5) - s.offset(t - 1e-5)) / 2e-5;
    CHECK(s.rate(t) == doctest::Approx(fd).epsilon(1e-6));
  }
  CHECK(s.rate(5.0) == 0.0);
}

TEST_CASE("rms area Simpson rule converges") {
  const PulseSequence seq = build_sequence(SequenceKind::Stirap, testing::paper_pulses());
  const double a = rms_area(seq, -400, 400, 2000);
  const double b = rms_area(seq, -400, 400, 4000);
  CHECK(a == doctest::Approx(b).epsilon(1e-10));
}

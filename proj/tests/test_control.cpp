#include <doctest.h>

#include <cmath>
#include <random>

#include "chaoslink/control.hpp"

using namespace chaoslink;

TEST_CASE("triangle ramp landmarks") {
  const RampParams r; // 3.8 .. 8.2 V at 2.5 kHz
  const double T = r.period();
  CHECK(ramp_value(0.0, r) == doctest::Approx(3.8));
  CHECK(ramp_value(T / 4, r) == doctest::Approx(6.0));
  CHECK(ramp_value(T / 2, r) == doctest::Approx(8.2));
  CHECK(ramp_value(3 * T / 4, r) == doctest::Approx(6.0));
  CHECK(ramp_value(T, r) == doctest::Approx(3.8));
}

TEST_CASE("sawtooth ramp and phase offset") {
  RampParams r;
  r.shape = RampShape::Sawtooth;
  const double T = r.period();
  CHECK(ramp_value(0.0, r) == doctest::Approx(3.8));
  CHECK(ramp_value(T / 2, r) == doctest::Approx(6.0));
  CHECK(ramp_value(T, r) == doctest::Approx(3.8));
  r.phase_offset = 0.25;
  CHECK(ramp_value(0.0, r) == doctest::Approx(3.8 + 0.25 * 4.4));
}

TEST_CASE("ramp pieces bracket t and repeat each period") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  for (auto shape : {RampShape::Triangle, RampShape::Sawtooth}) {
    RampParams r;
    r.shape = shape;
    r.phase_offset = 0.3;
    for (int k = 0; k < 1000; ++k) {
      const double t = u(rng);
      const RampPiece piece = ramp_piece(t, r);
      CHECK(piece.t_start <= t);
      CHECK(t < piece.t_end);
      const double v = ramp_value(t, r);
      CHECK(v >= r.v_lower - 1e-12);
      CHECK(v <= r.v_upper + 1e-12);
      CHECK(ramp_value(t + r.period(), r) == doctest::Approx(v).epsilon(1e-9));
    }
  }
}

TEST_CASE("ramp validation") {
  RampParams r;
  r.v_upper = r.v_lower;
  CHECK_THROWS_AS(r.validate(), ConfigError);
  r = {};
  r.frequency = 0.0;
  CHECK_THROWS_AS(r.validate(), ConfigError);
  r = {};
  r.phase_offset = 1.0;
  CHECK_THROWS_AS(r.validate(), ConfigError);
}

TEST_CASE("buck comparator: ties go OFF") {
  CHECK(buck_switch_state(5.0, 6.0) == SwitchPhase::On);
  CHECK(buck_switch_state(6.0, 6.0) == SwitchPhase::Off);
  CHECK(buck_switch_state(7.0, 6.0) == SwitchPhase::Off);
}

TEST_CASE("clock edges") {
  const BoostParams p;
  CHECK(clock_edges_through(-1e-9, p) == 0);
  CHECK(clock_edges_through(0.0, p) == 1);
  CHECK(clock_edges_through(99e-6, p) == 1);
  CHECK(clock_edges_through(100e-6, p) == 2);
  for (int n = 1; n < 2000; ++n)
    CHECK(clock_edges_through(static_cast<double>(n) * p.t_clk, p) == n + 1);
}

TEST_CASE("boost controller: full transition table") {
  const BoostParams p;
  // Edge at t = 100 us is new when one edge was consumed before.
  const double t = 100e-6;
  for (auto phase : {SwitchPhase::On, SwitchPhase::Off}) {
    for (bool edge : {true, false}) {
      for (bool above : {true, false}) {
        BoostControllerState ctl{phase, edge ? 1 : 2};
        const double i = above ? p.i_ref : p.i_ref - 0.1;
        const auto next = boost_controller_step(ctl, i, t, p);
        SwitchPhase expected;
        if (phase == SwitchPhase::On)
          expected = above ? SwitchPhase::Off : SwitchPhase::On; // edges ignored while ON
        else
          expected = edge ? SwitchPhase::On : SwitchPhase::Off;
        CAPTURE(static_cast<int>(phase));
        CAPTURE(edge);
        CAPTURE(above);
        CHECK(next.phase == expected);
        CHECK(next.edges_consumed == 2);
      }
    }
  }
}

TEST_CASE("edges arriving while ON are consumed, not queued") {
  const BoostParams p;
  BoostControllerState ctl{SwitchPhase::On, 1};
  ctl = boost_controller_step(ctl, 0.0, 350e-6, p); // three edges pass while ON
  CHECK(ctl.phase == SwitchPhase::On);
  CHECK(ctl.edges_consumed == 4);
  ctl = boost_controller_step(ctl, p.i_ref, 360e-6, p);
  CHECK(ctl.phase == SwitchPhase::Off);
  ctl = boost_controller_step(ctl, 0.0, 370e-6, p);
  CHECK(ctl.phase == SwitchPhase::Off);
  ctl = boost_controller_step(ctl, 0.0, 400e-6, p);
  CHECK(ctl.phase == SwitchPhase::On);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "chaoslink/engine.hpp"

using namespace chaoslink;

namespace {

IntegratorConfig boost_step(const BoostParams &p) {
  IntegratorConfig ic;
  ic.step = p.t_clk / 2000.0;
  return ic;
}

// Free boost run that also records each ON->OFF instant. Mirrors the
// segment loop of advance_boost.
struct Recorded {
  std::vector<BoostState> states; // after each step
  std::vector<double> turn_offs;
};

Recorded record_boost(const BoostParams &p, const IntegratorConfig &ic, BoostState x, int steps) {
  Recorded out;
  BoostControllerState ctl;
  const auto settle = [&](double i, double t) {
    for (int pass = 0; pass < 3; ++pass) {
      const auto next = boost_controller_step(ctl, i, t, p);
      if (ctl.phase == SwitchPhase::On && next.phase == SwitchPhase::Off) out.turn_offs.push_back(t);
      const bool changed = next.phase != ctl.phase;
      ctl = next;
      if (!changed) return;
    }
  };
  for (int k = 0; k < steps; ++k) {
    double tau = k * ic.step;
    const double t1 = (k + 1) * ic.step;
    Vec2 v = x.vec();
    settle(v[0], tau);
    while (tau < t1) {
      const double seg_end = std::min(t1, ctl.next_edge(p));
      double i_seen = 0.0;
      if (ctl.phase == SwitchPhase::On) {
        const auto f = boost_field(p, SwitchPhase::On);
        const Vec2 v_end = step_segment(f, v, seg_end - tau);
        if (v_end[0] >= p.i_ref) {
          const Vec2 v0 = v;
          const double ts = tau;
          const double te = locate_event([&](double t) { return step_segment(f, v0, t - ts)[0] - p.i_ref; },
                                         tau, seg_end, ic);
          v = step_segment(f, v0, te - ts);
          tau = te;
          i_seen = std::max(v[0], p.i_ref);
        } else {
          v = v_end;
          tau = seg_end;
          i_seen = v[0];
        }
      } else {
        v = step_segment(boost_field(p, SwitchPhase::Off), v, seg_end - tau);
        tau = seg_end;
        i_seen = v[0];
      }
      settle(i_seen, tau);
    }
    x = BoostState::from(v);
    out.states.push_back(x);
  }
  return out;
}

} // namespace

TEST_CASE("boost turn-offs land on i_ref within the event bound") {
  for (double i_ref : {0.5, 2.0, 2.5, 3.2, 4.0}) {
    BoostParams p;
    p.i_ref = i_ref;
    BoostSystem sys(p, boost_step(p), boost_initial_state(p));
    for (int k = 0; k < 2000 * 300; ++k) sys.step();
    const auto &s = sys.stats();
    CAPTURE(i_ref);
    CHECK(s.boost_turn_offs > 0);
    if (i_ref <= 0.5) CHECK(s.boost_zero_width_pulses > 0);
    CHECK(s.max_turn_off_error <= IntegratorConfig{}.event_tolerance * p.v_in / p.l);
  }
}

TEST_CASE("first boost turn-off from rest follows the linear ramp") {
  // From i = 0 with the switch closed at t = 0, v_c does not enter di/dt,
  // so i = v_in t / L reaches 0.3 A at 30 us.
  BoostParams p;
  p.i_ref = 0.3;
  const IntegratorConfig ic;
  const auto rec = record_boost(p, ic, {0.0, p.v_in}, 1000);
  REQUIRE(!rec.turn_offs.empty());
  CHECK(rec.turn_offs.front() == doctest::Approx(30e-6).epsilon(1e-9));
}

TEST_CASE("forced duty reproduces the averaged buck output") {
  for (double k : {0.2, 0.5, 0.8}) {
    IntegratorConfig ic;
    RampParams ramp;
    ic.step = ramp.period() / 2000.0;
    BuckSystem sys(BuckParams{}, ramp, ic);
    sys.force_duty(k);
    for (int n = 0; n < 2000 * 200; ++n) sys.step();
    const auto &s = sys.stats();
    const double observed = s.buck_on_time / s.buck_total_time;
    const double v_in = BuckParams{}.v_in;
    CAPTURE(k);
    CHECK(std::fabs(v_in * observed - ideal_gain(ConverterKind::Buck, k, v_in)) <=
          0.01 * ideal_gain(ConverterKind::Buck, k, v_in));
  }
  BuckSystem sys(BuckParams{}, RampParams{}, IntegratorConfig{});
  CHECK_THROWS_AS(sys.force_duty(1.5), DomainError);
}

TEST_CASE("buck phase sequence depends only on the comparator level") {
  // Two bucks from different states with one level history switch together.
  const RampParams ramp;
  IntegratorConfig ic;
  ic.step = ramp.period() / 2000.0;
  const BuckParams p;
  BuckState a{0.0, 0.0}, b{0.5, 1.0};
  SwitchPhase pa = SwitchPhase::Off, pb = SwitchPhase::Off;
  SwitchingStats sa, sb;
  for (int n = 0; n < 20000; ++n) {
    const double level = 6.0 + 1.5 * std::sin(n * 1e-3);
    const double t0 = n * ic.step, t1 = (n + 1) * ic.step;
    advance_buck(a, pa, level, t0, t1, p, ramp, ic, &sa);
    advance_buck(b, pb, level, t0, t1, p, ramp, ic, &sb);
    REQUIRE(pa == pb);
  }
  CHECK(sa.buck_on_to_off == sb.buck_on_to_off);
  CHECK(sa.buck_on_time == sb.buck_on_time);
}

TEST_CASE("buck state gap contracts under a shared phase sequence") {
  // Gap dynamics are the homogeneous part of the field: decay rates R_l/L
  // and 1/(R1 C) with a one-way coupling. Check a monotone envelope over
  // successive ramp periods.
  const RampParams ramp;
  IntegratorConfig ic;
  ic.step = ramp.period() / 2000.0;
  const BuckParams p;
  BuckState a{0.0, 0.0}, b{0.2, 0.8};
  SwitchPhase pa = SwitchPhase::Off, pb = SwitchPhase::Off;
  std::vector<double> envelope;
  double window_max = 0.0;
  for (int n = 1; n <= 2000 * 40; ++n) {
    const double level = 5.0;
    advance_buck(a, pa, level, (n - 1) * ic.step, n * ic.step, p, ramp, ic);
    advance_buck(b, pb, level, (n - 1) * ic.step, n * ic.step, p, ramp, ic);
    window_max = std::max(window_max, std::hypot(a.i - b.i, a.v_io - b.v_io));
    if (n % 2000 == 0) {
      envelope.push_back(window_max);
      window_max = 0.0;
    }
  }
  for (std::size_t k = 2; k < envelope.size(); ++k) CHECK(envelope[k] <= envelope[k - 1] * 1.01);
  CHECK(envelope.back() < 1e-6 * envelope.front());
}

TEST_CASE("recording helper agrees with advance_boost") {
  BoostParams p;
  p.i_ref = 3.2;
  const IntegratorConfig ic;
  const auto rec = record_boost(p, ic, boost_initial_state(p), 100000);
  BoostSystem sys(p, ic, boost_initial_state(p));
  for (int k = 0; k < 100000; ++k) {
    sys.step();
    REQUIRE(sys.boost() == rec.states[k]);
  }
  CHECK(static_cast<std::int64_t>(rec.turn_offs.size()) == sys.stats().boost_turn_offs);
}

namespace {

void feed(TurnOffGuide &guide, const std::vector<double> &instants, std::size_t &next, double until) {
  while (next < instants.size() && instants[next] <= until) guide.observed.push_back(instants[next++]);
}

} // namespace

TEST_CASE("guided boost with exact observations matches the free boost") {
  BoostParams p;
  p.i_ref = 3.2;
  const IntegratorConfig ic;
  const int steps = 200000;
  const auto rec = record_boost(p, ic, boost_initial_state(p), steps);
  BoostState x = boost_initial_state(p);
  BoostControllerState ctl;
  TurnOffGuide guide;
  guide.match_tolerance = 1e-12;
  guide.max_lateness = 4 * ic.step;
  SwitchingStats st;
  std::size_t next = 0;
  for (int k = 0; k < steps; ++k) {
    const double t1 = (k + 1) * ic.step;
    feed(guide, rec.turn_offs, next, t1 + guide.max_lateness);
    advance_boost_guided(x, ctl, k * ic.step, t1, p, ic, guide, &st);
    REQUIRE(x == rec.states[k]);
  }
  CHECK(st.boost_pinned_turn_offs == 0);
  CHECK(st.boost_turn_offs > 50);
}

TEST_CASE("guided boost pulls a displaced start onto the observed trajectory") {
  BoostParams p;
  p.i_ref = 3.2;
  const IntegratorConfig ic;
  const int steps = 400000;
  const auto rec = record_boost(p, ic, boost_initial_state(p), steps);
  BoostState x{0.4, p.v_in * 1.1};
  BoostControllerState ctl;
  TurnOffGuide guide;
  guide.match_tolerance = 1e-12;
  guide.max_lateness = 4 * ic.step;
  std::size_t next = 0;
  double worst_late = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double t1 = (k + 1) * ic.step;
    feed(guide, rec.turn_offs, next, t1 + guide.max_lateness);
    advance_boost_guided(x, ctl, k * ic.step, t1, p, ic, guide);
    if (k > steps / 2)
      worst_late = std::max(worst_late, std::hypot(x.i - rec.states[k].i, x.v_c - rec.states[k].v_c));
  }
  CHECK(worst_late < 1e-6);
}

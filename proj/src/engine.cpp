#include "chaoslink/engine.hpp"

#include <algorithm>
#include <cmath>

namespace chaoslink {

namespace {

void integrate_buck(Vec2 &x, SwitchPhase phase, double dt, const BuckParams &p,
                    SwitchingStats *stats) {
  if (dt <= 0.0) return;
  x = step_segment(buck_field(p, phase), x, dt);
  if (stats) {
    stats->buck_total_time += dt;
    if (phase == SwitchPhase::On) stats->buck_on_time += dt;
  }
}

void note_transition(SwitchPhase from, SwitchPhase to, SwitchingStats *stats) {
  if (!stats || from == to) return;
  if (to == SwitchPhase::Off)
    ++stats->buck_on_to_off;
  else
    ++stats->buck_off_to_on;
}

// Applies the controller until the phase stops changing; an edge can close
// the switch at a current already above i_ref, which then opens it again.
// `at_crossing` marks t as a located i = i_ref crossing, where the comparator
// fires even if rounding left i a hair below i_ref.
void settle(BoostControllerState &ctl, double i, double t, const BoostParams &p,
            SwitchingStats *stats, bool at_crossing = false) {
  for (int pass = 0; pass < 3; ++pass) {
    const double seen = at_crossing ? std::max(i, p.i_ref) : i;
    const BoostControllerState next = boost_controller_step(ctl, seen, t, p);
    if (stats) {
      if (ctl.phase == SwitchPhase::On && next.edges_consumed > ctl.edges_consumed)
        stats->boost_ignored_edges += next.edges_consumed - ctl.edges_consumed;
      if (ctl.phase == SwitchPhase::On && next.phase == SwitchPhase::Off && pass > 0) {
        ++stats->boost_zero_width_pulses;
      } else if (ctl.phase == SwitchPhase::On && next.phase == SwitchPhase::Off) {
        ++stats->boost_turn_offs;
        stats->max_turn_off_error = std::max(stats->max_turn_off_error, std::fabs(i - p.i_ref));
      }
    }
    const bool changed = next.phase != ctl.phase;
    ctl = next;
    if (!changed) return;
  }
}

} // namespace

void advance_buck(BuckState &state, SwitchPhase &phase, double level, double t0, double t1,
                  const BuckParams &p, const RampParams &ramp, const IntegratorConfig &cfg,
                  SwitchingStats *stats) {
  Vec2 x = state.vec();
  double tau = t0;
  while (tau < t1) {
    const RampPiece piece = ramp_piece(tau, ramp);
    const double seg_end = std::min(t1, piece.t_end);
    // At a sawtooth reset t_end the ramp jumps; use the limit from the left.
    const double r_end = seg_end == piece.t_end ? piece.v_end : piece.at(seg_end);
    const SwitchPhase start = buck_switch_state(level, piece.at(tau));
    const SwitchPhase end = buck_switch_state(level, r_end);
    note_transition(phase, start, stats);
    if (start == end) {
      integrate_buck(x, start, seg_end - tau, p, stats);
    } else {
      const auto gap = [&](double t) {
        return t == seg_end ? level - r_end : level - piece.at(t);
      };
      const double te = locate_event(gap, tau, seg_end, cfg);
      integrate_buck(x, start, te - tau, p, stats);
      integrate_buck(x, end, seg_end - te, p, stats);
      note_transition(start, end, stats);
    }
    phase = end;
    tau = seg_end;
  }
  if (stats && x[0] < 0.0) ++stats->negative_current_steps;
  state = BuckState::from(x);
}

void advance_boost(BoostState &state, BoostControllerState &ctl, double t0, double t1,
                   const BoostParams &p, const IntegratorConfig &cfg, SwitchingStats *stats) {
  Vec2 x = state.vec();
  double tau = t0;
  settle(ctl, x[0], tau, p, stats);
  while (tau < t1) {
    const double seg_end = std::min(t1, ctl.next_edge(p));
    bool at_crossing = false;
    if (ctl.phase == SwitchPhase::On) {
      const auto field = boost_field(p, SwitchPhase::On);
      const Vec2 x_end = step_segment(field, x, seg_end - tau);
      if (x_end[0] >= p.i_ref) {
        const Vec2 x0 = x;
        const double t_start = tau;
        const auto overshoot = [&](double t) {
          return step_segment(field, x0, t - t_start)[0] - p.i_ref;
        };
        const double te = locate_event(overshoot, tau, seg_end, cfg);
        x = step_segment(field, x0, te - t_start);
        tau = te;
        at_crossing = true;
      } else {
        x = x_end;
        tau = seg_end;
      }
    } else {
      x = step_segment(boost_field(p, SwitchPhase::Off), x, seg_end - tau);
      tau = seg_end;
    }
    settle(ctl, x[0], tau, p, stats, at_crossing);
  }
  if (stats && x[0] < 0.0) ++stats->negative_current_steps;
  state = BoostState::from(x);
}

void advance_boost_guided(BoostState &state, BoostControllerState &ctl, double t0, double t1,
                          const BoostParams &p, const IntegratorConfig &cfg, TurnOffGuide &guide,
                          SwitchingStats *stats) {
  auto &seen = guide.observed;
  const double tol = guide.match_tolerance;
  const auto take_edges = [&](double t) {
    const std::int64_t arrived = clock_edges_through(t, p);
    if (arrived <= ctl.edges_consumed) return;
    if (ctl.phase == SwitchPhase::On) {
      if (stats) stats->boost_ignored_edges += arrived - ctl.edges_consumed;
    } else {
      ctl.phase = SwitchPhase::On;
    }
    ctl.edges_consumed = arrived;
  };
  const auto note_pin = [&] {
    if (stats) ++stats->boost_pinned_turn_offs;
  };

  Vec2 x = state.vec();
  double tau = t0;
  take_edges(tau);
  while (tau < t1) {
    const double seg_end = std::min(t1, ctl.next_edge(p));
    if (ctl.phase == SwitchPhase::Off) {
      const auto field = boost_field(p, SwitchPhase::Off);
      // The transmitter opened later than this end did.
      while (!seen.empty() && seen.front() <= seg_end) {
        const double at = std::max(seen.front(), tau);
        seen.pop_front();
        x = step_segment(field, x, at - tau);
        x[0] = p.i_ref;
        tau = at;
        note_pin();
      }
      x = step_segment(field, x, seg_end - tau);
      tau = seg_end;
      take_edges(tau);
      continue;
    }
    const auto field = boost_field(p, SwitchPhase::On);
    const Vec2 x0 = x;
    const double t_start = tau;
    const Vec2 x_end = step_segment(field, x, seg_end - tau);
    double crossing = 0.0;
    const bool crossed = x_end[0] >= p.i_ref;
    if (crossed && x0[0] >= p.i_ref) {
      crossing = tau; // already past i_ref while waiting for an observation
    } else if (crossed) {
      const auto overshoot = [&](double t) {
        return step_segment(field, x0, t - t_start)[0] - p.i_ref;
      };
      crossing = locate_event(overshoot, tau, seg_end, cfg);
    }
    const bool have = !seen.empty();
    const double obs = have ? seen.front() : 0.0;

    // Closed by an edge at this instant with i already past i_ref.
    const bool zero_width = crossed && x0[0] >= p.i_ref && ctl.edges_consumed > 0 &&
                            static_cast<double>(ctl.edges_consumed - 1) * p.t_clk == t_start;
    double t_off = 0.0;
    bool open = false;
    bool pin = false;
    if (crossed && have && std::fabs(crossing - obs) <= tol) {
      t_off = crossing;
      open = true;
      seen.pop_front();
    } else if (have && obs <= seg_end && !(!crossed && obs > seg_end - tol) &&
               (!crossed || obs < crossing || obs - crossing <= guide.max_lateness)) {
      // An observation within tol of the segment end may still match an own
      // crossing that rounding put just past the end.
      t_off = std::max(obs, tau);
      open = pin = true;
      seen.pop_front();
    } else if (crossed && !(have && obs - crossing <= guide.max_lateness)) {
      t_off = crossing;
      open = true;
    }

    if (!open) {
      x = x_end;
      tau = seg_end;
      take_edges(tau);
      continue;
    }
    x = step_segment(field, x0, t_off - t_start);
    if (pin) {
      x[0] = p.i_ref;
      note_pin();
    }
    tau = t_off;
    take_edges(tau);
    if (stats && zero_width && t_off == t_start) {
      ++stats->boost_zero_width_pulses;
    } else if (stats) {
      ++stats->boost_turn_offs;
      stats->max_turn_off_error = std::max(stats->max_turn_off_error, std::fabs(x[0] - p.i_ref));
    }
    ctl.phase = SwitchPhase::Off;
  }
  if (stats && x[0] < 0.0) ++stats->negative_current_steps;
  state = BoostState::from(x);
}

BuckSystem::BuckSystem(BuckParams params, RampParams ramp, IntegratorConfig cfg, BuckState init,
                       double cmp_gain)
    : params_(params), ramp_(ramp), cfg_(cfg), x_(init), cmp_gain_(cmp_gain) {
  params_.validate();
  ramp_.validate();
  cfg_.validate();
}

void BuckSystem::force_duty(double duty) {
  if (!(duty >= 0.0 && duty <= 1.0)) throw DomainError("force_duty: duty must lie in [0, 1]");
  ramp_.shape = RampShape::Sawtooth;
  forced_ = true;
  forced_level_ = ramp_.v_upper - duty * (ramp_.v_upper - ramp_.v_lower);
}

void BuckSystem::step() {
  const double t0 = time();
  const double t1 = static_cast<double>(k_ + 1) * cfg_.step;
  const double level = forced_ ? forced_level_ : cmp_gain_ * x_.v_io;
  advance_buck(x_, phase_, level, t0, t1, params_, ramp_, cfg_, &stats_);
  ++k_;
}

BoostSystem::BoostSystem(BoostParams params, IntegratorConfig cfg, BoostState init)
    : params_(params), cfg_(cfg), x_(init) {
  params_.validate();
  cfg_.validate();
}

void BoostSystem::step() {
  const double t0 = time();
  const double t1 = static_cast<double>(k_ + 1) * cfg_.step;
  advance_boost(x_, ctl_, t0, t1, params_, cfg_, &stats_);
  ++k_;
}

} // namespace chaoslink

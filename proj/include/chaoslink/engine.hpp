#pragma once

#include <array>
#include <cstdint>
#include <deque>

#include "chaoslink/control.hpp"
#include "chaoslink/converter.hpp"

namespace chaoslink {

/// Counters collected while advancing the converters.
struct SwitchingStats {
  std::int64_t buck_on_to_off = 0;
  std::int64_t buck_off_to_on = 0;
  double buck_on_time = 0.0; // s
  double buck_total_time = 0.0;
  std::int64_t boost_turn_offs = 0;
  std::int64_t boost_pinned_turn_offs = 0; // guided runs only
  std::int64_t boost_ignored_edges = 0;
  // Clock edge reached with i already >= i_ref: the switch closes and opens
  // at the same instant. Not counted in boost_turn_offs.
  std::int64_t boost_zero_width_pulses = 0;
  double max_turn_off_error = 0.0;       // max |i - i_ref| at ON->OFF, A
  std::int64_t negative_current_steps = 0;
};

/// Advances the buck over [t0, t1] while its comparator input is held at
/// `level`. The interval is split at ramp vertices and at comparator
/// crossings. `phase` holds the phase before t0 on entry and the phase in
/// force at t1 on return.
void advance_buck(BuckState &x, SwitchPhase &phase, double level, double t0, double t1, const BuckParams &p,
                         const RampParams &ramp, const IntegratorConfig &cfg,
                         SwitchingStats *stats = nullptr);

/// Advances the boost over [t0, t1], splitting at clock edges and at the
/// i = i_ref crossing.
void advance_boost(BoostState &x, BoostControllerState &ctl, double t0, double t1,
                   const BoostParams &p, const IntegratorConfig &cfg,
                   SwitchingStats *stats = nullptr);

/// Switch-off instants observed from outside a boost, oldest first.
struct TurnOffGuide {
  std::deque<double> observed;
  // An own i_ref crossing this close to an observed instant is the same event.
  double match_tolerance = 0.0; // s
  // How long after its own crossing the boost waits for a later observation.
  double max_lateness = 0.0; // s
};

/// Boost advance whose switch-offs follow observed instants.
///
/// Clock edges close the switch as in advance_boost. An own i_ref crossing
/// opens the switch when an observation lies within match_tolerance of it or
/// when none follows within max_lateness. An observation earlier than the
/// own crossing, or later but within max_lateness, opens the switch at the
/// observed instant instead, with the current set to i_ref. An observation
/// that arrives while the switch is already open sets the current to i_ref.
/// The caller must supply every observation up to t1 + max_lateness.
void advance_boost_guided(BoostState &x, BoostControllerState &ctl, double t0, double t1,
                          const BoostParams &p, const IntegratorConfig &cfg, TurnOffGuide &guide,
                          SwitchingStats *stats = nullptr);

/// Stand-alone buck: comparator compares cmp_gain * v_io (sampled at each
/// step start) with the ramp.
class BuckSystem {
public:
  static constexpr std::size_t dim = 2;
  using State = std::array<double, dim>;

  BuckSystem(BuckParams params, RampParams ramp, IntegratorConfig cfg, BuckState init = {},
             double cmp_gain = 1.0);

  void step();
  double time() const { return static_cast<double>(k_) * cfg_.step; }
  std::int64_t step_index() const { return k_; }
  double step_size() const { return cfg_.step; }
  double controller_period() const { return ramp_.period(); }

  State state() const { return x_.vec(); }
  void set_state(const State &s) { x_ = BuckState::from(s); }
  const BuckState &buck() const { return x_; }
  SwitchPhase phase() const { return phase_; }
  const SwitchingStats &stats() const { return stats_; }

  // Replace the comparator with a constant level on a sawtooth of the same
  // frequency, giving a fixed ON fraction `duty` per period.
  void force_duty(double duty);

private:
  BuckParams params_;
  RampParams ramp_;
  IntegratorConfig cfg_;
  BuckState x_;
  double cmp_gain_;
  SwitchPhase phase_ = SwitchPhase::Off;
  std::int64_t k_ = 0;
  bool forced_ = false;
  double forced_level_ = 0.0;
  SwitchingStats stats_;
};

class BoostSystem {
public:
  static constexpr std::size_t dim = 2;
  using State = std::array<double, dim>;

  BoostSystem(BoostParams params, IntegratorConfig cfg, BoostState init);

  void step();
  double time() const { return static_cast<double>(k_) * cfg_.step; }
  std::int64_t step_index() const { return k_; }
  double step_size() const { return cfg_.step; }
  double controller_period() const { return params_.t_clk; }

  State state() const { return x_.vec(); }
  void set_state(const State &s) { x_ = BoostState::from(s); }
  const BoostState &boost() const { return x_; }
  const BoostControllerState &controller() const { return ctl_; }
  const SwitchingStats &stats() const { return stats_; }

private:
  BoostParams params_;
  IntegratorConfig cfg_;
  BoostState x_;
  BoostControllerState ctl_;
  std::int64_t k_ = 0;
  SwitchingStats stats_;
};

// Default starting point: capacitor precharged to the input through the diode.
inline BoostState boost_initial_state(const BoostParams &p) { return {0.0, p.v_in}; }

} // namespace chaoslink

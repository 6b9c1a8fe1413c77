#pragma once

#include <cstdint>

#include "chaoslink/converter.hpp"

namespace chaoslink {

enum class RampShape { Triangle, Sawtooth };

struct RampParams {
  double v_lower = 3.8;
  double v_upper = 8.2;
  double frequency = 2500.0;
  RampShape shape = RampShape::Triangle;
  double phase_offset = 0.0; // fraction of a period, [0, 1)

  double period() const { return 1.0 / frequency; }
  void validate() const;
};

/// Monotone linear stretch of the ramp: value runs from v_start at t_start
/// to v_end as t approaches t_end.
struct RampPiece {
  double t_start;
  double t_end;
  double v_start;
  double v_end;

  double at(double t) const {
    return v_start + (v_end - v_start) * ((t - t_start) / (t_end - t_start));
  }
};

double ramp_value(double t, const RampParams &ramp);

/// The piece containing t, with t_start <= t < t_end.
RampPiece ramp_piece(double t, const RampParams &ramp);

// ON iff the comparator input is strictly below the ramp; ties go OFF.
constexpr SwitchPhase buck_switch_state(double v_cmp, double v_ramp) {
  return v_cmp < v_ramp ? SwitchPhase::On : SwitchPhase::Off;
}

struct BoostControllerState {
  SwitchPhase phase = SwitchPhase::Off;
  // Clock edges sit at n * t_clk for n = 0, 1, 2, ...; this counts those
  // already seen, so the next edge is at edges_consumed * t_clk.
  std::int64_t edges_consumed = 0;

  double next_edge(const BoostParams &p) const { return static_cast<double>(edges_consumed) * p.t_clk; }
  bool operator==(const BoostControllerState &) const = default;
};

/// Number of clock edges at or before t.
std::int64_t clock_edges_through(double t, const BoostParams &p);

/// Discrete current-mode law evaluated at time t with inductor current i.
///
/// Edges arriving while ON are consumed and ignored. While ON, reaching
/// i_ref opens the switch. While OFF, any newly arrived edge closes it.
BoostControllerState boost_controller_step(BoostControllerState ctl, double i, double t,
                                           const BoostParams &p);

} // namespace chaoslink

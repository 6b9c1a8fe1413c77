#include "chaoslink/control.hpp"

#include <algorithm>
#include <cmath>

namespace chaoslink {

void RampParams::validate() const {
  if (!std::isfinite(v_lower) || !std::isfinite(v_upper) || !(v_upper > v_lower))
    throw ConfigError("ramp.v_upper", "must exceed ramp.v_lower");
  if (!(frequency > 0.0) || !std::isfinite(frequency))
    throw ConfigError("ramp.frequency", "must be finite and strictly positive");
  if (!(phase_offset >= 0.0 && phase_offset < 1.0))
    throw ConfigError("ramp.phase_offset", "must lie in [0, 1)");
}

RampPiece ramp_piece(double t, const RampParams &ramp) {
  const double period = ramp.period();
  const double width = ramp.shape == RampShape::Triangle ? 0.5 * period : period;
  const double shift = ramp.phase_offset * period;
  auto start_of = [&](double n) { return n * width - shift; };

  double n = std::floor((t + shift) / width);
  // Correct for rounding so that start_of(n) <= t < start_of(n + 1).
  while (start_of(n) > t) n -= 1.0;
  while (start_of(n + 1.0) <= t) n += 1.0;

  RampPiece piece{start_of(n), start_of(n + 1.0), ramp.v_lower, ramp.v_upper};
  if (ramp.shape == RampShape::Triangle && std::fmod(std::fabs(n), 2.0) == 1.0)
    std::swap(piece.v_start, piece.v_end);
  return piece;
}

double ramp_value(double t, const RampParams &ramp) { return ramp_piece(t, ramp).at(t); }

std::int64_t clock_edges_through(double t, const BoostParams &p) {
  if (t < 0.0) return 0;
  auto n = static_cast<std::int64_t>(std::floor(t / p.t_clk));
  while (n > 0 && static_cast<double>(n) * p.t_clk > t) --n;
  while (static_cast<double>(n + 1) * p.t_clk <= t) ++n;
  return n + 1;
}

BoostControllerState boost_controller_step(BoostControllerState ctl, double i, double t,
                                           const BoostParams &p) {
  const std::int64_t arrived = clock_edges_through(t, p);
  const bool edge = arrived > ctl.edges_consumed;
  ctl.edges_consumed = std::max(ctl.edges_consumed, arrived);
  if (ctl.phase == SwitchPhase::On) {
    if (i >= p.i_ref) ctl.phase = SwitchPhase::Off;
  } else if (edge) {
    ctl.phase = SwitchPhase::On;
  }
  return ctl;
}

} // namespace chaoslink

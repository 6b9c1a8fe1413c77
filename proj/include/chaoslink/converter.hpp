#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>

#include "chaoslink/error.hpp"

namespace chaoslink {

using Vec2 = std::array<double, 2>;

enum class SwitchPhase { On, Off };

std::string_view to_string(SwitchPhase phase);

/// Buck converter with an error-integrator low-pass in the current-sense path.
///
/// The comparator input v_io is a filtered version of the voltage across the
/// sense resistor in series with the load.
struct BuckParams {
  double v_in = 24.0;    // V
  double l = 20e-3;      // H
  double c = 47e-9;      // F, integrator capacitor
  double r_l = 22.0;     // Ohm, load
  double r1 = 10e3;      // Ohm
  double r2 = 10e3;      // Ohm
  double r_sense = 1.0;  // Ohm

  void validate() const;
};

struct BuckState {
  double i = 0.0;     // inductor/load current, A
  double v_io = 0.0;  // error-integrator output, V

  Vec2 vec() const { return {i, v_io}; }
  static BuckState from(const Vec2 &x) { return {x[0], x[1]}; }
  bool operator==(const BuckState &) const = default;
};

/// Boost converter under clocked current-mode control.
struct BoostParams {
  double v_in = 10.0;    // V
  double l = 1e-3;       // H
  double c = 12e-6;      // F
  double r = 20.0;       // Ohm, load
  double i_ref = 2.5;    // A
  double t_clk = 100e-6; // s

  void validate() const;
};

struct BoostState {
  double i = 0.0;    // A
  double v_c = 0.0;  // V

  Vec2 vec() const { return {i, v_c}; }
  static BoostState from(const Vec2 &x) { return {x[0], x[1]}; }
  bool operator==(const BoostState &) const = default;
};

struct IntegratorConfig {
  double step = 5e-8;             // s
  double event_tolerance = 1e-10; // s
  int max_bisections = 64;

  void validate() const;
};

// Per-phase vector fields. Both are affine in the state.
Vec2 buck_rhs(const BuckState &x, const BuckParams &p, SwitchPhase phase);
Vec2 boost_rhs(const BoostState &x, const BoostParams &p, SwitchPhase phase);

/// One classical RK4 step of length dt under a fixed vector field.
/// Throws NumericError when the result is not finite.
template <class Rhs>
Vec2 step_segment(Rhs &&rhs, const Vec2 &x, double dt) {
  if (dt == 0.0) return x;
  auto axpy = [](const Vec2 &a, double s, const Vec2 &b) {
    return Vec2{a[0] + s * b[0], a[1] + s * b[1]};
  };
  const Vec2 k1 = rhs(x);
  const Vec2 k2 = rhs(axpy(x, 0.5 * dt, k1));
  const Vec2 k3 = rhs(axpy(x, 0.5 * dt, k2));
  const Vec2 k4 = rhs(axpy(x, dt, k3));
  const double w = dt / 6.0;
  const Vec2 out{x[0] + w * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                 x[1] + w * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
  if (!std::isfinite(out[0]) || !std::isfinite(out[1]))
    throw NumericError("non-finite state after integration step");
  return out;
}

inline auto buck_field(const BuckParams &p, SwitchPhase phase) {
  return [&p, phase](const Vec2 &x) { return buck_rhs(BuckState::from(x), p, phase); };
}

inline auto boost_field(const BoostParams &p, SwitchPhase phase) {
  return [&p, phase](const Vec2 &x) { return boost_rhs(BoostState::from(x), p, phase); };
}

/// Bisection for a sign change of event_fn on [t_lo, t_hi], finished by one
/// secant step inside the final bracket.
///
/// Returns t_lo if event_fn(t_lo) == 0. Otherwise the result lies in a
/// bracket of width at most cfg.event_tolerance that contains the crossing.
/// The secant step makes the result vary smoothly with the data behind
/// event_fn instead of snapping to the bisection lattice; for an affine
/// event_fn it is the exact root up to rounding.
template <class Fn>
double locate_event(Fn &&event_fn, double t_lo, double t_hi, const IntegratorConfig &cfg) {
  double f_lo = event_fn(t_lo);
  if (f_lo == 0.0) return t_lo;
  double f_hi = event_fn(t_hi);
  if (f_hi == 0.0 && t_hi - t_lo <= cfg.event_tolerance) return t_hi;
  if (std::signbit(f_lo) == std::signbit(f_hi) && f_hi != 0.0)
    throw EventError("locate_event: no sign change on bracket");
  const auto finish = [&] {
    if (f_hi == 0.0) return t_hi;
    const double w = f_lo / (f_lo - f_hi);
    return std::clamp(t_lo + w * (t_hi - t_lo), t_lo, t_hi);
  };
  for (int n = 0; n < cfg.max_bisections; ++n) {
    if (t_hi - t_lo <= cfg.event_tolerance) return finish();
    const double mid = t_lo + 0.5 * (t_hi - t_lo);
    if (mid <= t_lo || mid >= t_hi) return finish();
    const double f_mid = event_fn(mid);
    if (f_mid != 0.0 && std::signbit(f_mid) == std::signbit(f_lo)) {
      t_lo = mid;
      f_lo = f_mid;
    } else {
      t_hi = mid;
      f_hi = f_mid;
    }
  }
  if (t_hi - t_lo <= cfg.event_tolerance) return finish();
  throw EventError("locate_event: bracket did not shrink to tolerance");
}

enum class ConverterKind { Buck, Boost };

/// Ideal averaged output: buck v_in*k, boost v_in*k/(1-k).
double ideal_gain(ConverterKind kind, double k, double v_in);

} // namespace chaoslink

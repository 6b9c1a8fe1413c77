#pragma once

#include <array>
#include <cstdint>
#include <deque>

#include "chaoslink/converter.hpp"

namespace chaoslink {

/// Finds boost switch-off instants in a signal sampled at t_j = j * step that
/// contains g2 * v_c plus components smooth on the scale of a few steps.
///
/// A switch-off raises dv_c/dt by i_ref / C, so the signal gains a slope step
/// of size g2 * i_ref / C at the switch-off instant. Each interval
/// [t_p, t_p+1] is tested by fitting the second differences around it with a
/// constant curvature, the known turn-on kinks at clock edges (unknown size)
/// and a switch-off kink at an unknown position inside the interval. A
/// second-order correction takes v_c as y / gain, so the smooth part should
/// stay small next to g2 * v_c.
class TurnOffObserver {
public:
  TurnOffObserver(const BoostParams &p, double gain, double step);

  /// Feeds the next sample y_j.
  void push(double y);

  /// Detections in intervals [t_p, t_p+1] with p below this are final.
  std::int64_t final_through() const { return next_p_ - 1; }

  /// Detected instants not yet taken, oldest first.
  std::deque<double> &detections() { return found_; }

  // Fit thresholds in units of the expected kink size; exposed for tests.
  static constexpr double kMaxFitRms = 0.05;
  static constexpr double kMinNullRms = 0.15;
  static constexpr double kThetaSlack = 1e-3;

private:
  void examine(std::int64_t p);

  BoostParams params_;
  double step_;
  double gain_;
  double kink_; // expected slope step times step, V
  std::array<double, 8> ring_{};
  std::int64_t count_ = 0;
  std::int64_t next_p_ = 2;
  bool held_ = false; // best candidate so far, not yet final
  double held_time_ = 0.0;
  double held_rss_ = 0.0;
  std::int64_t held_p_ = 0;
  std::deque<double> found_;
};

} // namespace chaoslink

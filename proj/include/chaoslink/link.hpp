#pragma once

#include <deque>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "chaoslink/channel.hpp"
#include "chaoslink/control.hpp"
#include "chaoslink/converter.hpp"
#include "chaoslink/engine.hpp"
#include "chaoslink/observer.hpp"
#include "chaoslink/waveform.hpp"

namespace chaoslink {

struct Silence {};

struct SineMessage {
  double amplitude = 0.5;
  double frequency = 50.0;
  double phase = 0.0; // rad
};

// Symmetric triangle starting at 0 and rising, peak at a quarter period.
struct TriangleMessage {
  double amplitude = 0.5;
  double frequency = 50.0;
};

// Linear interpolation between samples; defined on [0, step * (n - 1)].
struct SampledMessage {
  double step = 1e-4;
  std::vector<double> values;
};

using MessageSource = std::variant<Silence, SineMessage, TriangleMessage, SampledMessage>;

double message_value(const MessageSource &src, double t);
void validate(const MessageSource &src);

struct MaskingGains {
  double g1 = 1.0;
  double g2 = 1.0;
};

// Signals on the wire are carried on a fixed-point grid of 2^-40 V. Sums of
// grid values below 2^12 V in magnitude are exact in double precision, so
// masking followed by unmasking returns the transmitted message bit for bit.
inline constexpr int kGridBits = 40;
double snap_to_grid(double v);

/// g1*x1 + g2*x2 + s, each term snapped to the wire grid.
double compose_masked(double x1, double x2, double s, const MaskingGains &gains);

/// composite - g1*x1 - g2*x2 with the same term snapping as compose_masked.
double unmask(double composite, double x1, double x2, const MaskingGains &gains);

/// State of one end of the link. Transmitter and receiver share the layout.
struct EndState {
  BuckState buck;
  BoostState boost;
  BoostControllerState boost_ctl;
  SwitchPhase buck_phase = SwitchPhase::Off;

  std::array<double, 4> vec() const { return {buck.i, buck.v_io, boost.i, boost.v_c}; }
  void set_vec(const std::array<double, 4> &x) {
    buck = {x[0], x[1]};
    boost = {x[2], x[3]};
  }
  bool operator==(const EndState &) const = default;
};

// Frozen reference operating point of the link. The boost runs at a chaotic
// i_ref taken from the committed i_ref sweep; the ramp spans the range of the
// composite so that the transmitter buck keeps switching.
inline constexpr double kReferenceIRef = 3.2;      // A
inline constexpr double kReferenceRampLower = 17.0; // V
inline constexpr double kReferenceRampUpper = 29.0; // V

inline BoostParams reference_boost() {
  BoostParams p;
  p.i_ref = kReferenceIRef;
  return p;
}

inline RampParams reference_ramp() {
  RampParams r;
  r.v_lower = kReferenceRampLower;
  r.v_upper = kReferenceRampUpper;
  return r;
}

// Both converters discharged except the boost capacitor, precharged to v_in.
inline EndState reference_initial(const BoostParams &p) {
  EndState s;
  s.boost = boost_initial_state(p);
  return s;
}

struct LinkConfig {
  BuckParams buck;
  BoostParams boost = reference_boost();
  RampParams ramp = reference_ramp();
  MaskingGains gains;
  IntegratorConfig integrator;
  double duration = 0.5;       // s
  double sample_step = 1e-5;   // s
  double transient_cut = 0.04; // s
  EndState initial = reference_initial(reference_boost()); // transmitter start
  double rx_state_offset = 0.1; // receiver start = initial * (1 + offset)

  void validate() const;
  // Integrator steps per output sample.
  std::int64_t sample_stride() const;
  std::int64_t total_steps() const;
};

/// Receiver start derived from the transmitter start.
EndState offset_state(const EndState &s, double relative_offset);

struct StepOutput {
  EndState state;
  double signal; // composite for the transmitter, recovered message for the receiver
};

/// Transmitter over [t, t + dt]: the composite formed at t drives its own buck
/// comparator for the whole step.
StepOutput transmitter_step(EndState tx, double t, double dt, const LinkConfig &cfg,
                            const MessageSource &src, SwitchingStats *stats = nullptr);

/// Free-running receiver over [t, t + dt] fed with the received composite
/// sample: the boost follows its own current-mode controller only. Exact
/// when seeded with the transmitter state; a chaotic boost started elsewhere
/// does not converge this way. Receiver below adds the observation path.
StepOutput receiver_step(EndState rx, double composite_received, double t, double dt,
                         const LinkConfig &cfg, SwitchingStats *stats = nullptr);

/// Receiver fed one composite sample per integrator step.
///
/// The buck is driven by the composite as it arrives. The boost runs
/// kLag steps behind: the composite minus the receiver's own g1 * v_io
/// reveals the transmitter's switch-offs, which steer the boost through
/// advance_boost_guided. Output for step j is the state at t_j and the
/// recovered sample unmask(r_j, v_io(t_j), v_c(t_j)).
class Receiver {
public:
  static constexpr int kLag = 10;

  struct Output {
    std::int64_t index;
    EndState state;
    double recovered;
  };

  Receiver(const LinkConfig &cfg, EndState init);

  void push(double composite_received);
  std::deque<Output> &ready() { return ready_; }
  const SwitchingStats &stats() const { return stats_; }

private:
  struct Pending {
    double received;
    BuckState buck;
    SwitchPhase buck_phase;
  };

  void drain();

  LinkConfig cfg_;
  BuckState buck_;
  SwitchPhase buck_phase_;
  BoostState boost_;
  BoostControllerState boost_ctl_;
  TurnOffObserver observer_;
  TurnOffGuide guide_;
  std::deque<Pending> pending_; // pending_.front() is step boost_index_
  std::int64_t pushed_ = 0;
  std::int64_t boost_index_ = 0; // boost state is at t_boost_index_
  std::deque<Output> ready_;
  SwitchingStats stats_;
};

/// Scale one named receiver parameter (e.g. "buck.l") by (1 + delta).
struct ParamPerturbation {
  std::string parameter;
  double relative_delta = 0.0;
};

// Names accepted by ParamPerturbation and parameter_ref.
const std::vector<std::string> &perturbable_parameters();
/// The named circuit parameter of cfg; throws ConfigError for unknown names.
double &parameter_ref(LinkConfig &cfg, const std::string &name);
void apply_perturbation(LinkConfig &cfg, const ParamPerturbation &pert);

struct LinkResult {
  Waveform composite;
  Waveform recovered;
  Waveform message;
  Waveform sync_error;
  SwitchingStats tx_stats;
  SwitchingStats rx_stats;
};

/// Transmitter, channel and receiver advanced in lockstep at the integrator
/// step. One composite sample crosses the channel per step, indexed by the
/// step number; the receiver holds it for the step.
LinkResult run_link(const LinkConfig &cfg, const MessageSource &src, const ChannelModel &channel,
                    const std::optional<ParamPerturbation> &rx_override = std::nullopt);

} // namespace chaoslink

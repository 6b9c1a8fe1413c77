#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "chaoslink/channel.hpp"
#include "chaoslink/link.hpp"
#include "chaoslink/waveform.hpp"

namespace chaoslink {

// Buck and Boost run stand-alone; Transmitter is the link's transmitter end
// with a silent message (composite fed back into its own buck comparator).
enum class SystemKind { Buck, Boost, Transmitter };

std::string to_string(SystemKind kind);
SystemKind parse_system_kind(const std::string &name);

struct AnalysisSettings {
  // Stand-alone converters step at controller period / steps_per_period;
  // the transmitter uses the link integrator step.
  int steps_per_period = 2000;
  double transient_periods = 100.0;
  std::int64_t section_samples = 200;

  void validate() const;
};

/// Common stepping interface over the analysed systems.
class Simulation {
public:
  virtual ~Simulation() = default;
  virtual void step() = 0;
  virtual double time() const = 0;
  virtual double step_size() const = 0;
  // Ramp period for the buck and the transmitter, clock period for the boost.
  virtual double controller_period() const = 0;
  virtual std::vector<double> state() const = 0;
  virtual void set_state(const std::vector<double> &x) = 0;
  virtual std::unique_ptr<Simulation> clone() const = 0;
  // Component recorded by bifurcation sweeps: buck v_io, boost i,
  // transmitter v_io.
  virtual std::size_t section_component() const = 0;
};

/// Fresh simulation at t = 0 from the system's default initial state.
std::unique_ptr<Simulation> make_simulation(SystemKind kind, const LinkConfig &point,
                                            const AnalysisSettings &settings = {});

/// Advances `run` until t >= t_end.
void advance_to(Simulation &run, double t_end);

/// States at t = transient_cut + offset + n * period, n = 0 .. N - 1 with
/// N = floor((duration - transient_cut - offset) / period) + 1, linearly
/// interpolated between the bracketing integrator steps. `run` must not be
/// past the first sample time.
std::vector<std::vector<double>> poincare_sample(Simulation &run, double period, double offset,
                                                 double duration, double transient_cut);

/// Number of groups after sorting, where a gap larger than
/// rel_tol * max(|v|, 1e-300) starts a new group.
int count_clusters(std::vector<double> values, double rel_tol);

struct SweepRequest {
  SystemKind system = SystemKind::Boost;
  std::string parameter = "boost.i_ref";
  double lo = 0.5;
  double hi = 4.0;
  int n_points = 351;
  LinkConfig point;
  AnalysisSettings settings;

  void validate() const;
};

/// Parameters a sweep may vary for each system.
const std::vector<std::string> &sweep_parameters(SystemKind kind);

struct BifurcationData {
  std::string system;
  std::string parameter;
  std::vector<double> values; // strictly increasing
  std::vector<std::vector<double>> samples;
  std::vector<bool> flagged; // non-finite trajectory at this value
  bool operator==(const BifurcationData &) const = default;
};

/// Parameter value of point n: lo + n * (hi - lo) / (n_points - 1).
double sweep_value(const SweepRequest &req, int n);

/// Section samples at one parameter value; empty and flagged on a numeric
/// failure.
std::vector<double> sweep_point(const SweepRequest &req, double value, bool &flagged);

/// Serial reference.
BifurcationData bifurcation_sweep(const SweepRequest &req);
/// Same result computed with one OpenMP task per parameter value.
BifurcationData bifurcation_sweep_parallel(const SweepRequest &req);

struct LyapunovSettings {
  double epsilon0 = 1e-8;
  double renorm_periods = 5.0;    // controller periods between renormalizations
  double horizon_periods = 2000.0;
  // Perturbation direction; empty means all components equally.
  std::vector<double> direction;

  void validate() const;
};

/// Two-trajectory estimate of the largest exponent (1/s) after the
/// settings' transient. Throws NumericError if either trajectory escapes.
double lyapunov_estimate(SystemKind kind, const LinkConfig &point, const AnalysisSettings &settings,
                         const LyapunovSettings &lyap);

struct DivergenceTrace {
  Waveform distance;      // one sample per controller period
  double initial = 0.0;   // offset applied
  double max_ratio = 0.0; // max distance / initial
  double time_to_100x = -1.0; // s after the offset, -1 if never reached
  double saturation = 0.0; // largest distance seen
};

/// Distance between a trajectory and a copy offset by `offset` in one state
/// component, from the end of the transient over `horizon` seconds.
DivergenceTrace sensitive_dependence(SystemKind kind, const LinkConfig &point,
                                     const AnalysisSettings &settings, std::size_t component,
                                     double offset, double horizon);

struct RecoveryMetrics {
  double rmse = 0.0;
  double relative_rmse = 0.0; // NaN when the message has zero RMS
  double correlation = 0.0;   // NaN when either signal is constant
  double snr_db = 0.0;        // +inf when rmse == 0
  bool snr_infinite = false;
  bool message_silent = false;
};

/// Pearson correlation; NaN when either input is constant.
double correlation(const std::vector<double> &a, const std::vector<double> &b);

/// Metrics over samples with t > transient_cut.
RecoveryMetrics recovery_metrics(const Waveform &message, const Waveform &recovered,
                                 double transient_cut);

struct MismatchPoint {
  double delta;
  RecoveryMetrics metrics;
};

/// One run_link per delta with only `parameter` of the receiver scaled by
/// (1 + delta). Serial reference.
std::vector<MismatchPoint> mismatch_sensitivity(const LinkConfig &cfg, const MessageSource &src,
                                                const ChannelModel &channel,
                                                const std::string &parameter,
                                                const std::vector<double> &deltas);
/// Same result with the deltas run concurrently.
std::vector<MismatchPoint> mismatch_sensitivity_parallel(const LinkConfig &cfg,
                                                         const MessageSource &src,
                                                         const ChannelModel &channel,
                                                         const std::string &parameter,
                                                         const std::vector<double> &deltas);

} // namespace chaoslink

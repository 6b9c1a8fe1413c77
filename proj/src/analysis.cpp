#include "chaoslink/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include "chaoslink/error.hpp"

namespace chaoslink {

namespace {

template <class System>
class ConverterSimulation final : public Simulation {
public:
  ConverterSimulation(System sys, std::size_t component)
      : sys_(std::move(sys)), component_(component) {}

  void step() override { sys_.step(); }
  double time() const override { return sys_.time(); }
  double step_size() const override { return sys_.step_size(); }
  double controller_period() const override { return sys_.controller_period(); }
  std::vector<double> state() const override {
    const auto s = sys_.state();
    return {s.begin(), s.end()};
  }
  void set_state(const std::vector<double> &x) override {
    if (x.size() != System::dim) throw DomainError("set_state: wrong dimension");
    sys_.set_state({x[0], x[1]});
  }
  std::unique_ptr<Simulation> clone() const override {
    return std::make_unique<ConverterSimulation>(*this);
  }
  std::size_t section_component() const override { return component_; }

private:
  System sys_;
  std::size_t component_;
};

class TransmitterSimulation final : public Simulation {
public:
  explicit TransmitterSimulation(const LinkConfig &cfg) : cfg_(cfg), x_(cfg.initial) {}

  void step() override {
    x_ = transmitter_step(x_, time(), cfg_.integrator.step, cfg_, Silence{}).state;
    ++k_;
  }
  double time() const override { return static_cast<double>(k_) * cfg_.integrator.step; }
  double step_size() const override { return cfg_.integrator.step; }
  double controller_period() const override { return cfg_.ramp.period(); }
  std::vector<double> state() const override {
    const auto v = x_.vec();
    return {v.begin(), v.end()};
  }
  void set_state(const std::vector<double> &x) override {
    if (x.size() != 4) throw DomainError("set_state: wrong dimension");
    x_.set_vec({x[0], x[1], x[2], x[3]});
  }
  std::unique_ptr<Simulation> clone() const override {
    return std::make_unique<TransmitterSimulation>(*this);
  }
  std::size_t section_component() const override { return 1; }

private:
  LinkConfig cfg_;
  EndState x_;
  std::int64_t k_ = 0;
};

double distance(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += (a[n] - b[n]) * (a[n] - b[n]);
  return std::sqrt(s);
}

bool finite(const std::vector<double> &x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void run_periods(Simulation &run, double periods) {
  advance_to(run, run.time() + periods * run.controller_period());
}

std::int64_t steps_for(const Simulation &run, double span) {
  return std::max<std::int64_t>(1, std::llround(span / run.step_size()));
}

double mean(const std::vector<double> &v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

std::string to_string(SystemKind kind) {
  switch (kind) {
  case SystemKind::Buck: return "buck";
  case SystemKind::Boost: return "boost";
  case SystemKind::Transmitter: return "transmitter";
  }
  return "?";
}

SystemKind parse_system_kind(const std::string &name) {
  if (name == "buck") return SystemKind::Buck;
  if (name == "boost") return SystemKind::Boost;
  if (name == "transmitter") return SystemKind::Transmitter;
  throw ConfigError("system", "expected buck, boost or transmitter, got '" + name + "'");
}

void AnalysisSettings::validate() const {
  if (steps_per_period < 16) throw ConfigError("analysis.steps_per_period", "must be at least 16");
  if (!(transient_periods >= 0.0) || !std::isfinite(transient_periods))
    throw ConfigError("analysis.transient_periods", "must be finite and non-negative");
  if (section_samples < 1) throw ConfigError("analysis.section_samples", "must be positive");
}

std::unique_ptr<Simulation> make_simulation(SystemKind kind, const LinkConfig &point,
                                            const AnalysisSettings &settings) {
  settings.validate();
  IntegratorConfig ic = point.integrator;
  switch (kind) {
  case SystemKind::Buck:
    ic.step = point.ramp.period() / settings.steps_per_period;
    ic.event_tolerance = std::min(ic.event_tolerance, 1e-3 * ic.step);
    return std::make_unique<ConverterSimulation<BuckSystem>>(
        BuckSystem(point.buck, point.ramp, ic, BuckState{}), 1);
  case SystemKind::Boost:
    ic.step = point.boost.t_clk / settings.steps_per_period;
    ic.event_tolerance = std::min(ic.event_tolerance, 1e-3 * ic.step);
    return std::make_unique<ConverterSimulation<BoostSystem>>(
        BoostSystem(point.boost, ic, boost_initial_state(point.boost)), 0);
  case SystemKind::Transmitter:
    point.validate();
    return std::make_unique<TransmitterSimulation>(point);
  }
  throw DomainError("make_simulation: unknown system");
}

void advance_to(Simulation &run, double t_end) {
  // Half a step of slack absorbs rounding in k * h.
  while (run.time() < t_end - 0.5 * run.step_size()) run.step();
}

std::vector<std::vector<double>> poincare_sample(Simulation &run, double period, double offset,
                                                 double duration, double transient_cut) {
  if (!(period > 0.0) || !std::isfinite(period))
    throw DomainError("poincare_sample: period must be finite and positive");
  if (!(offset >= 0.0) || !(transient_cut >= 0.0))
    throw DomainError("poincare_sample: offset and transient_cut must be non-negative");
  const double first = transient_cut + offset;
  if (!(duration >= first)) throw DomainError("poincare_sample: duration ends before first sample");
  if (run.time() > first) throw DomainError("poincare_sample: run already past first sample");

  const auto count = static_cast<std::int64_t>(std::floor((duration - first) / period)) + 1;
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<double> prev = run.state();
  double t_prev = run.time();
  for (std::int64_t n = 0; n < count; ++n) {
    const double ts = first + static_cast<double>(n) * period;
    while (run.time() < ts) {
      prev = run.state();
      t_prev = run.time();
      run.step();
    }
    const std::vector<double> cur = run.state();
    const double span = run.time() - t_prev;
    const double w = span > 0.0 ? (ts - t_prev) / span : 1.0;
    std::vector<double> x(cur.size());
    for (std::size_t c = 0; c < cur.size(); ++c) x[c] = prev[c] + w * (cur[c] - prev[c]);
    if (!finite(x)) throw NumericError("poincare_sample: non-finite state at t = " + std::to_string(ts));
    out.push_back(std::move(x));
  }
  return out;
}

int count_clusters(std::vector<double> values, double rel_tol) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  int clusters = 1;
  for (std::size_t n = 1; n < values.size(); ++n) {
    const double scale = std::max(std::fabs(values[n]), 1e-300);
    if (values[n] - values[n - 1] > rel_tol * scale) ++clusters;
  }
  return clusters;
}

const std::vector<std::string> &sweep_parameters(SystemKind kind) {
  static const std::vector<std::string> buck{"buck.v_in"};
  static const std::vector<std::string> boost{"boost.i_ref", "boost.v_in"};
  static const std::vector<std::string> tx{"boost.i_ref", "buck.v_in"};
  switch (kind) {
  case SystemKind::Buck: return buck;
  case SystemKind::Boost: return boost;
  case SystemKind::Transmitter: return tx;
  }
  return buck;
}

void SweepRequest::validate() const {
  const auto &allowed = sweep_parameters(system);
  if (std::find(allowed.begin(), allowed.end(), parameter) == allowed.end())
    throw ConfigError("sweep.parameter",
                      "'" + parameter + "' cannot be swept for the " + to_string(system));
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo))
    throw ConfigError("sweep.hi", "sweep range must be finite with hi > lo");
  if (n_points < 2) throw ConfigError("sweep.n_points", "must be at least 2");
  settings.validate();
}

double sweep_value(const SweepRequest &req, int n) {
  return req.lo + static_cast<double>(n) * (req.hi - req.lo) / (req.n_points - 1);
}

std::vector<double> sweep_point(const SweepRequest &req, double value, bool &flagged) {
  flagged = false;
  LinkConfig point = req.point;
  parameter_ref(point, req.parameter) = value;
  if (req.system == SystemKind::Transmitter) point.initial = reference_initial(point.boost);
  try {
    auto run = make_simulation(req.system, point, req.settings);
    const double period = run->controller_period();
    const double cut = req.settings.transient_periods * period;
    const double duration = cut + static_cast<double>(req.settings.section_samples - 1) * period;
    const auto states = poincare_sample(*run, period, 0.0, duration, cut);
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto &s : states) out.push_back(s[run->section_component()]);
    return out;
  } catch (const NumericError &) {
    flagged = true;
    return {};
  }
}

BifurcationData bifurcation_sweep(const SweepRequest &req) {
  req.validate();
  BifurcationData d{to_string(req.system), req.parameter, {}, {}, {}};
  for (int n = 0; n < req.n_points; ++n) {
    const double v = sweep_value(req, n);
    bool flag = false;
    d.samples.push_back(sweep_point(req, v, flag));
    d.values.push_back(v);
    d.flagged.push_back(flag);
  }
  return d;
}

BifurcationData bifurcation_sweep_parallel(const SweepRequest &req) {
  req.validate();
  const auto n_points = static_cast<std::size_t>(req.n_points);
  BifurcationData d{to_string(req.system), req.parameter, std::vector<double>(n_points),
                    std::vector<std::vector<double>>(n_points), std::vector<bool>(n_points)};
  std::vector<char> flags(n_points, 0);
  std::vector<std::exception_ptr> errors(n_points);
#pragma omp parallel for schedule(dynamic, 1)
  for (int n = 0; n < req.n_points; ++n) {
    const auto u = static_cast<std::size_t>(n);
    try {
      bool flag = false;
      d.values[u] = sweep_value(req, n);
      d.samples[u] = sweep_point(req, d.values[u], flag);
      flags[u] = flag ? 1 : 0;
    } catch (...) {
      errors[u] = std::current_exception();
    }
  }
  for (const auto &e : errors)
    if (e) std::rethrow_exception(e);
  for (std::size_t n = 0; n < n_points; ++n) d.flagged[n] = flags[n] != 0;
  return d;
}

void LyapunovSettings::validate() const {
  if (!(epsilon0 > 0.0) || !std::isfinite(epsilon0))
    throw ConfigError("lyapunov.epsilon0", "must be finite and positive");
  if (!(renorm_periods > 0.0)) throw ConfigError("lyapunov.renorm_periods", "must be positive");
  if (!(horizon_periods >= renorm_periods))
    throw ConfigError("lyapunov.horizon_periods", "must cover at least one renormalization");
}

double lyapunov_estimate(SystemKind kind, const LinkConfig &point, const AnalysisSettings &settings,
                         const LyapunovSettings &lyap) {
  lyap.validate();
  auto a = make_simulation(kind, point, settings);
  run_periods(*a, settings.transient_periods);
  if (!finite(a->state())) throw NumericError("lyapunov: trajectory escaped during transient");

  const std::size_t dim = a->state().size();
  std::vector<double> dir = lyap.direction;
  if (dir.empty()) dir.assign(dim, 1.0);
  if (dir.size() != dim) throw DomainError("lyapunov: direction has the wrong dimension");
  const double norm = std::sqrt(std::inner_product(dir.begin(), dir.end(), dir.begin(), 0.0));
  if (!(norm > 0.0)) throw DomainError("lyapunov: direction must be non-zero");
  for (double &c : dir) c /= norm;

  auto b = a->clone();
  const auto displace = [&](const std::vector<double> &base, const std::vector<double> &unit) {
    std::vector<double> x = base;
    for (std::size_t c = 0; c < dim; ++c) x[c] += lyap.epsilon0 * unit[c];
    b->set_state(x);
  };
  displace(a->state(), dir);

  const std::int64_t per = steps_for(*a, lyap.renorm_periods * a->controller_period());
  const auto rounds =
      std::max<std::int64_t>(1, std::llround(lyap.horizon_periods / lyap.renorm_periods));
  // A distance collapsing to exactly zero contributes this floor ratio.
  constexpr double kMinRatio = 1e-12;
  double sum = 0.0;
  for (std::int64_t r = 0; r < rounds; ++r) {
    for (std::int64_t k = 0; k < per; ++k) {
      a->step();
      b->step();
    }
    const auto xa = a->state();
    const auto xb = b->state();
    if (!finite(xa) || !finite(xb))
      throw NumericError("lyapunov: trajectory escaped at t = " + std::to_string(a->time()));
    const double d = distance(xa, xb);
    sum += std::log(std::max(d / lyap.epsilon0, kMinRatio));
    if (d > 0.0) {
      std::vector<double> unit(dim);
      for (std::size_t c = 0; c < dim; ++c) unit[c] = (xb[c] - xa[c]) / d;
      displace(xa, unit);
    } else {
      displace(xa, dir);
    }
  }
  return sum / (static_cast<double>(rounds * per) * a->step_size());
}

DivergenceTrace sensitive_dependence(SystemKind kind, const LinkConfig &point,
                                     const AnalysisSettings &settings, std::size_t component,
                                     double offset, double horizon) {
  if (!(offset != 0.0) || !std::isfinite(offset))
    throw DomainError("sensitive_dependence: offset must be finite and non-zero");
  if (!(horizon > 0.0)) throw DomainError("sensitive_dependence: horizon must be positive");
  auto a = make_simulation(kind, point, settings);
  if (component >= a->state().size())
    throw DomainError("sensitive_dependence: component out of range");
  run_periods(*a, settings.transient_periods);
  auto b = a->clone();
  auto x = b->state();
  x[component] += offset;
  b->set_state(x);

  DivergenceTrace tr;
  tr.initial = std::fabs(offset);
  const double period = a->controller_period();
  const double t_start = a->time();
  tr.distance.t0 = 0.0;
  tr.distance.step = period;
  tr.distance.samples.push_back(tr.initial);
  const auto n_samples = static_cast<std::int64_t>(std::floor(horizon / period));
  for (std::int64_t n = 1; n <= n_samples; ++n) {
    const double t_target = t_start + static_cast<double>(n) * period;
    while (a->time() < t_target - 0.5 * a->step_size()) {
      a->step();
      b->step();
    }
    const double d = distance(a->state(), b->state());
    if (!std::isfinite(d)) throw NumericError("sensitive_dependence: trajectory escaped");
    tr.distance.samples.push_back(d);
    tr.saturation = std::max(tr.saturation, d);
    if (tr.time_to_100x < 0.0 && d >= 100.0 * tr.initial) tr.time_to_100x = tr.distance.time(
        static_cast<std::size_t>(n));
  }
  tr.max_ratio = std::max(tr.saturation, tr.initial) / tr.initial;
  return tr;
}

double correlation(const std::vector<double> &a, const std::vector<double> &b) {
  if (a.size() != b.size() || a.size() < 2) throw DomainError("correlation: need two equal series");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    sab += (a[n] - ma) * (b[n] - mb);
    saa += (a[n] - ma) * (a[n] - ma);
    sbb += (b[n] - mb) * (b[n] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

RecoveryMetrics recovery_metrics(const Waveform &message, const Waveform &recovered,
                                 double transient_cut) {
  if (message.size() != recovered.size() || message.step != recovered.step ||
      message.t0 != recovered.t0)
    throw DomainError("recovery_metrics: waveforms are not aligned");
  std::vector<double> s, r;
  for (std::size_t n = 0; n < message.size(); ++n) {
    if (message.time(n) <= transient_cut) continue;
    s.push_back(message.samples[n]);
    r.push_back(recovered.samples[n]);
  }
  if (s.size() < 2) throw DomainError("recovery_metrics: fewer than two samples after the cut");

  double err2 = 0.0, sig2 = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    err2 += (r[n] - s[n]) * (r[n] - s[n]);
    sig2 += s[n] * s[n];
  }
  const auto count = static_cast<double>(s.size());
  RecoveryMetrics m;
  m.rmse = std::sqrt(err2 / count);
  const double rms = std::sqrt(sig2 / count);
  m.message_silent = rms == 0.0;
  m.relative_rmse = m.message_silent ? std::numeric_limits<double>::quiet_NaN() : m.rmse / rms;
  m.correlation = correlation(s, r);
  if (err2 == 0.0) {
    m.snr_infinite = true;
    m.snr_db = std::numeric_limits<double>::infinity();
  } else {
    m.snr_db = 10.0 * std::log10(sig2 / err2);
  }
  return m;
}

namespace {

MismatchPoint mismatch_point(const LinkConfig &cfg, const MessageSource &src,
                             const ChannelModel &channel, const std::string &parameter,
                             double delta) {
  const LinkResult res = run_link(cfg, src, channel, ParamPerturbation{parameter, delta});
  return {delta, recovery_metrics(res.message, res.recovered, cfg.transient_cut)};
}

void check_mismatch(const std::string &parameter, const std::vector<double> &deltas) {
  const auto &names = perturbable_parameters();
  if (std::find(names.begin(), names.end(), parameter) == names.end())
    throw ConfigError("sensitivity.parameter", "'" + parameter + "' is not a receiver parameter");
  for (double d : deltas)
    if (!(d > -1.0) || !std::isfinite(d))
      throw ConfigError("sensitivity.deltas", "each delta must be finite and above -1");
}

} // namespace

std::vector<MismatchPoint> mismatch_sensitivity(const LinkConfig &cfg, const MessageSource &src,
                                                const ChannelModel &channel,
                                                const std::string &parameter,
                                                const std::vector<double> &deltas) {
  check_mismatch(parameter, deltas);
  std::vector<MismatchPoint> out;
  for (double d : deltas) out.push_back(mismatch_point(cfg, src, channel, parameter, d));
  return out;
}

std::vector<MismatchPoint> mismatch_sensitivity_parallel(const LinkConfig &cfg,
                                                         const MessageSource &src,
                                                         const ChannelModel &channel,
                                                         const std::string &parameter,
                                                         const std::vector<double> &deltas) {
  check_mismatch(parameter, deltas);
  std::vector<MismatchPoint> out(deltas.size());
  std::vector<std::exception_ptr> errors(deltas.size());
  const auto n = static_cast<std::int64_t>(deltas.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < n; ++k) {
    const auto u = static_cast<std::size_t>(k);
    try {
      out[u] = mismatch_point(cfg, src, channel, parameter, deltas[u]);
    } catch (...) {
      errors[u] = std::current_exception();
    }
  }
  for (const auto &e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

} // namespace chaoslink

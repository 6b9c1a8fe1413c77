#include "chaoslink/link.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <string>

#include "chaoslink/error.hpp"

namespace chaoslink {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double snapped_term(double gain, double x) { return snap_to_grid(gain * x); }

// Own crossing and observed switch-off closer than this, in steps, are one event.
constexpr double kMatchTolerance = 2e-5;
// Wait for a later observation this many steps past an own crossing.
constexpr double kMaxLateness = 4.0;

double norm4(const std::array<double, 4> &a, const std::array<double, 4> &b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < 4; ++j) acc += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(acc);
}

} // namespace

double message_value(const MessageSource &src, double t) {
  return std::visit(
      overloaded{
          [](const Silence &) { return 0.0; },
          [t](const SineMessage &m) {
            return m.amplitude * std::sin(2.0 * std::numbers::pi * m.frequency * t + m.phase);
          },
          [t](const TriangleMessage &m) {
            const double cycles = m.frequency * t;
            const double x = cycles - std::floor(cycles);
            double shape;
            if (x < 0.25)
              shape = 4.0 * x;
            else if (x < 0.75)
              shape = 2.0 - 4.0 * x;
            else
              shape = 4.0 * x - 4.0;
            return m.amplitude * shape;
          },
          [t](const SampledMessage &m) {
            const double span = m.step * static_cast<double>(m.values.size() - 1);
            if (m.values.empty() || t < 0.0 || t > span)
              throw DomainError("message_value: time outside sampled message");
            if (m.values.size() == 1) return m.values.front();
            const double pos = t / m.step;
            auto n = static_cast<std::size_t>(std::floor(pos));
            if (n >= m.values.size() - 1) return m.values.back();
            const double frac = pos - static_cast<double>(n);
            return m.values[n] + frac * (m.values[n + 1] - m.values[n]);
          },
      },
      src);
}

void validate(const MessageSource &src) {
  std::visit(overloaded{
                 [](const Silence &) {},
                 [](const SineMessage &m) {
                   if (!(m.amplitude >= 0.0) || !std::isfinite(m.amplitude))
                     throw ConfigError("message.amplitude", "must be finite and >= 0");
                   if (!(m.frequency > 0.0) || !std::isfinite(m.frequency))
                     throw ConfigError("message.frequency", "must be finite and > 0");
                   if (!std::isfinite(m.phase)) throw ConfigError("message.phase", "must be finite");
                 },
                 [](const TriangleMessage &m) {
                   if (!(m.amplitude >= 0.0) || !std::isfinite(m.amplitude))
                     throw ConfigError("message.amplitude", "must be finite and >= 0");
                   if (!(m.frequency > 0.0) || !std::isfinite(m.frequency))
                     throw ConfigError("message.frequency", "must be finite and > 0");
                 },
                 [](const SampledMessage &m) {
                   if (!(m.step > 0.0)) throw ConfigError("message.step", "must be > 0");
                   if (m.values.empty()) throw ConfigError("message.file", "no samples");
                   for (double v : m.values)
                     if (!std::isfinite(v)) throw ConfigError("message.file", "non-finite sample");
                 },
             },
             src);
}

double snap_to_grid(double v) {
  return std::ldexp(std::nearbyint(std::ldexp(v, kGridBits)), -kGridBits);
}

double compose_masked(double x1, double x2, double s, const MaskingGains &gains) {
  return snapped_term(gains.g1, x1) + snapped_term(gains.g2, x2) + snap_to_grid(s);
}

double unmask(double composite, double x1, double x2, const MaskingGains &gains) {
  return composite - (snapped_term(gains.g1, x1) + snapped_term(gains.g2, x2));
}

void LinkConfig::validate() const {
  buck.validate();
  boost.validate();
  ramp.validate();
  integrator.validate();
  if (!std::isfinite(gains.g1)) throw ConfigError("gains.g1", "must be finite");
  if (!std::isfinite(gains.g2)) throw ConfigError("gains.g2", "must be finite");
  if (!(transient_cut >= 0.0)) throw ConfigError("link.transient_cut", "must be >= 0");
  if (!(duration > transient_cut) || !std::isfinite(duration))
    throw ConfigError("link.duration", "must exceed link.transient_cut");
  if (!(sample_step >= integrator.step))
    throw ConfigError("link.sample_step", "must be >= integrator.step");
  const double ratio = sample_step / integrator.step;
  if (std::fabs(ratio - std::round(ratio)) > 1e-6 * ratio)
    throw ConfigError("link.sample_step", "must be an integer multiple of integrator.step");
  for (double v : initial.vec())
    if (!std::isfinite(v)) throw ConfigError("initial", "initial state must be finite");
  if (!std::isfinite(rx_state_offset))
    throw ConfigError("link.rx_state_offset", "must be finite");
}

std::int64_t LinkConfig::sample_stride() const {
  return std::max<std::int64_t>(1, std::llround(sample_step / integrator.step));
}

std::int64_t LinkConfig::total_steps() const { return std::llround(duration / integrator.step); }

EndState offset_state(const EndState &s, double relative_offset) {
  EndState out = s;
  auto x = s.vec();
  for (double &v : x) v *= 1.0 + relative_offset;
  out.set_vec(x);
  return out;
}

namespace {

StepOutput transmit(EndState tx, double t, double dt, const LinkConfig &cfg, double message,
                    SwitchingStats *stats) {
  const double composite = compose_masked(tx.buck.v_io, tx.boost.v_c, message, cfg.gains);
  advance_buck(tx.buck, tx.buck_phase, composite, t, t + dt, cfg.buck, cfg.ramp, cfg.integrator,
               stats);
  advance_boost(tx.boost, tx.boost_ctl, t, t + dt, cfg.boost, cfg.integrator, stats);
  return {tx, composite};
}

} // namespace

StepOutput transmitter_step(EndState tx, double t, double dt, const LinkConfig &cfg,
                            const MessageSource &src, SwitchingStats *stats) {
  return transmit(tx, t, dt, cfg, message_value(src, t), stats);
}

StepOutput receiver_step(EndState rx, double composite_received, double t, double dt,
                         const LinkConfig &cfg, SwitchingStats *stats) {
  const double recovered = unmask(composite_received, rx.buck.v_io, rx.boost.v_c, cfg.gains);
  advance_buck(rx.buck, rx.buck_phase, composite_received, t, t + dt, cfg.buck, cfg.ramp,
               cfg.integrator, stats);
  advance_boost(rx.boost, rx.boost_ctl, t, t + dt, cfg.boost, cfg.integrator, stats);
  return {rx, recovered};
}

namespace {

struct NamedParam {
  const char *name;
  double *(*get)(LinkConfig &);
};

#define CHAOSLINK_PARAM(group, field) \
  NamedParam { #group "." #field, [](LinkConfig &c) { return &c.group.field; } }

const NamedParam kParams[] = {
    CHAOSLINK_PARAM(buck, v_in),   CHAOSLINK_PARAM(buck, l),      CHAOSLINK_PARAM(buck, c),
    CHAOSLINK_PARAM(buck, r_l),    CHAOSLINK_PARAM(buck, r1),     CHAOSLINK_PARAM(buck, r2),
    CHAOSLINK_PARAM(buck, r_sense), CHAOSLINK_PARAM(boost, v_in), CHAOSLINK_PARAM(boost, l),
    CHAOSLINK_PARAM(boost, c),     CHAOSLINK_PARAM(boost, r),     CHAOSLINK_PARAM(boost, i_ref),
};

#undef CHAOSLINK_PARAM

} // namespace

const std::vector<std::string> &perturbable_parameters() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto &p : kParams) out.emplace_back(p.name);
    return out;
  }();
  return names;
}

double &parameter_ref(LinkConfig &cfg, const std::string &name) {
  for (const auto &p : kParams)
    if (name == p.name) return *p.get(cfg);
  throw ConfigError(name, "not a circuit parameter");
}

void apply_perturbation(LinkConfig &cfg, const ParamPerturbation &pert) {
  parameter_ref(cfg, pert.parameter) *= 1.0 + pert.relative_delta;
}

Receiver::Receiver(const LinkConfig &cfg, EndState init)
    : cfg_(cfg), buck_(init.buck), buck_phase_(init.buck_phase), boost_(init.boost),
      boost_ctl_(init.boost_ctl), observer_(cfg.boost, cfg.gains.g2, cfg.integrator.step) {
  guide_.match_tolerance = kMatchTolerance * cfg.integrator.step;
  guide_.max_lateness = kMaxLateness * cfg.integrator.step;
}

void Receiver::push(double received) {
  const double h = cfg_.integrator.step;
  const double t = static_cast<double>(pushed_) * h;
  const double dt = static_cast<double>(pushed_ + 1) * h - t;
  pending_.push_back({received, buck_, buck_phase_});
  observer_.push(received - snapped_term(cfg_.gains.g1, buck_.v_io));
  advance_buck(buck_, buck_phase_, received, t, t + dt, cfg_.buck, cfg_.ramp, cfg_.integrator,
               &stats_);
  ++pushed_;
  auto &found = observer_.detections();
  while (!found.empty()) {
    guide_.observed.push_back(found.front());
    found.pop_front();
  }
  drain();
}

void Receiver::drain() {
  const double h = cfg_.integrator.step;
  // Step j may run once detections up to t_j+1 + max_lateness are final.
  while (!pending_.empty() &&
         observer_.final_through() >= boost_index_ + 2 + static_cast<std::int64_t>(kMaxLateness)) {
    const Pending &now = pending_.front();
    EndState s;
    s.buck = now.buck;
    s.buck_phase = now.buck_phase;
    s.boost = boost_;
    s.boost_ctl = boost_ctl_;
    ready_.push_back({boost_index_, s, unmask(now.received, now.buck.v_io, boost_.v_c, cfg_.gains)});
    const double t = static_cast<double>(boost_index_) * h;
    const double t1 = static_cast<double>(boost_index_ + 1) * h;
    advance_boost_guided(boost_, boost_ctl_, t, t1, cfg_.boost, cfg_.integrator, guide_, &stats_);
    pending_.pop_front();
    ++boost_index_;
  }
}

LinkResult run_link(const LinkConfig &cfg, const MessageSource &src, const ChannelModel &channel,
                    const std::optional<ParamPerturbation> &rx_override) {
  cfg.validate();
  validate(src);
  validate(channel);
  LinkConfig rx_cfg = cfg;
  if (rx_override) {
    apply_perturbation(rx_cfg, *rx_override);
    rx_cfg.validate();
  }

  const double h = cfg.integrator.step;
  const std::int64_t n_steps = cfg.total_steps();
  const std::int64_t stride = cfg.sample_stride();
  const double sample_step = static_cast<double>(stride) * h;
  const auto n_samples = static_cast<std::size_t>(n_steps / stride);

  LinkResult out;
  for (Waveform *w : {&out.composite, &out.recovered, &out.message, &out.sync_error}) {
    w->t0 = 0.0;
    w->step = sample_step;
    w->samples.reserve(n_samples);
  }

  struct Sent {
    std::array<double, 4> state;
    double composite;
  };
  std::deque<Sent> sent;
  EndState tx = cfg.initial;
  Receiver rx(rx_cfg, offset_state(cfg.initial, cfg.rx_state_offset));
  // The transmitter runs past the end so the receiver can finish the last steps.
  const std::int64_t run_steps = n_steps + 2 * Receiver::kLag;
  for (std::int64_t k = 0; k < run_steps && out.recovered.samples.size() < n_samples; ++k) {
    const double t = static_cast<double>(k) * h;
    const double dt = static_cast<double>(k + 1) * h - t;
    const auto tx_vec = tx.vec();
    // Past the end the message is held at its last value.
    const double message = message_value(src, static_cast<double>(std::min(k, n_steps - 1)) * h);
    StepOutput tx_out = transmit(tx, t, dt, cfg, message, k < n_steps ? &out.tx_stats : nullptr);
    tx = tx_out.state;
    sent.push_back({tx_vec, tx_out.signal});
    rx.push(channel_apply(channel, tx_out.signal, static_cast<std::uint64_t>(k)));
    for (auto &r : rx.ready()) {
      const Sent &s = sent.front();
      if (r.index < n_steps && r.index % stride == 0) {
        const double tr = static_cast<double>(r.index) * h;
        out.composite.samples.push_back(s.composite);
        out.recovered.samples.push_back(r.recovered);
        out.message.samples.push_back(snap_to_grid(message_value(src, tr)));
        out.sync_error.samples.push_back(norm4(s.state, r.state.vec()));
      }
      sent.pop_front();
    }
    rx.ready().clear();
  }
  out.rx_stats = rx.stats();
  return out;
}

} // namespace chaoslink

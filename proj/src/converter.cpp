#include "chaoslink/converter.hpp"

#include <string>

namespace chaoslink {

namespace {

void require_positive(double v, const char *key) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ConfigError(key, "must be finite and strictly positive, got " + std::to_string(v));
}

} // namespace

std::string_view to_string(SwitchPhase phase) { return phase == SwitchPhase::On ? "on" : "off"; }

void BuckParams::validate() const {
  require_positive(v_in, "buck.v_in");
  require_positive(l, "buck.l");
  require_positive(c, "buck.c");
  require_positive(r_l, "buck.r_l");
  require_positive(r1, "buck.r1");
  require_positive(r2, "buck.r2");
  require_positive(r_sense, "buck.r_sense");
}

void BoostParams::validate() const {
  require_positive(v_in, "boost.v_in");
  require_positive(l, "boost.l");
  require_positive(c, "boost.c");
  require_positive(r, "boost.r");
  require_positive(i_ref, "boost.i_ref");
  require_positive(t_clk, "boost.t_clk");
}

void IntegratorConfig::validate() const {
  require_positive(step, "integrator.step");
  require_positive(event_tolerance, "integrator.event_tolerance");
  if (!(event_tolerance < step))
    throw ConfigError("integrator.event_tolerance", "must be smaller than integrator.step");
  if (max_bisections < 20) throw ConfigError("integrator.max_bisections", "must be >= 20");
}

Vec2 buck_rhs(const BuckState &x, const BuckParams &p, SwitchPhase phase) {
  const double source = phase == SwitchPhase::On ? p.v_in / p.l : 0.0;
  const double di = source - (p.r_l / p.l) * x.i;
  // Sense voltage is r_sense * i; with the nominal 1 Ohm this is the printed
  // integrator equation term for term.
  const double coupling = (p.r1 + p.r2) / (p.c * p.r1 * p.r2) - p.r_l / p.l;
  const double dv = p.r_sense * (x.i * coupling + source) - x.v_io / (p.r1 * p.c);
  return {di, dv};
}

Vec2 boost_rhs(const BoostState &x, const BoostParams &p, SwitchPhase phase) {
  const double decay = x.v_c / (p.c * p.r);
  if (phase == SwitchPhase::On) {
#ifdef CHAOSLINK_BOOST_SIGN_AS_PRINTED
    return {p.v_in / p.l, decay};
#else
    return {p.v_in / p.l, -decay};
#endif
  }
  return {(p.v_in - x.v_c) / p.l, x.i / p.c - decay};
}

double ideal_gain(ConverterKind kind, double k, double v_in) {
  if (!(k >= 0.0 && k < 1.0)) throw DomainError("ideal_gain: duty ratio must lie in [0, 1)");
  return kind == ConverterKind::Buck ? v_in * k : v_in * k / (1.0 - k);
}

} // namespace chaoslink

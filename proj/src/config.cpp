#include "chaoslink/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "chaoslink/error.hpp"
#include "chaoslink/io.hpp"

namespace chaoslink {

namespace {

using Path = std::filesystem::path;

struct Entry {
  std::string key;
  std::function<void(RunConfig &, const std::string &, const Path &)> set;
  std::function<std::string(const RunConfig &)> get;
};

double to_double(const std::string &key, const std::string &v) {
  try {
    return parse_double(v);
  } catch (const DomainError &) {
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }
}

template <class Int> Int to_int(const std::string &key, const std::string &v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  return out;
}

std::string one_of(const std::string &key, const std::string &v,
                   std::initializer_list<const char *> allowed) {
  for (const char *a : allowed)
    if (v == a) return v;
  std::string list;
  for (const char *a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
  throw ConfigError(key, "expected one of " + list + ", got '" + v + "'");
}

std::vector<double> to_list(const std::string &key, const std::string &v) {
  std::vector<double> out;
  if (v.empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError(key, "empty list element");
    out.push_back(to_double(key, item.substr(b, e - b + 1)));
  }
  return out;
}

std::string from_list(const std::vector<double> &v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : ",") + format_double(x);
  return out;
}

template <class Access> Entry number(std::string key, Access access) {
  return {key,
          [key, access](RunConfig &c, const std::string &v, const Path &) {
            access(c) = to_double(key, v);
          },
          [access](const RunConfig &c) { return format_double(access(c)); }};
}

template <class Int, class Access> Entry integer(std::string key, Access access) {
  return {key,
          [key, access](RunConfig &c, const std::string &v, const Path &) {
            access(c) = to_int<Int>(key, v);
          },
          [access](const RunConfig &c) { return std::to_string(access(c)); }};
}

#define CHAOSLINK_NUM(key, expr) number(key, [](auto &c) -> auto & { return expr; })

const std::vector<Entry> &entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t{
        CHAOSLINK_NUM("buck.v_in", c.link.buck.v_in),
        CHAOSLINK_NUM("buck.l", c.link.buck.l),
        CHAOSLINK_NUM("buck.c", c.link.buck.c),
        CHAOSLINK_NUM("buck.r_l", c.link.buck.r_l),
        CHAOSLINK_NUM("buck.r1", c.link.buck.r1),
        CHAOSLINK_NUM("buck.r2", c.link.buck.r2),
        CHAOSLINK_NUM("buck.r_sense", c.link.buck.r_sense),
        CHAOSLINK_NUM("boost.v_in", c.link.boost.v_in),
        CHAOSLINK_NUM("boost.l", c.link.boost.l),
        CHAOSLINK_NUM("boost.c", c.link.boost.c),
        CHAOSLINK_NUM("boost.r", c.link.boost.r),
        CHAOSLINK_NUM("boost.i_ref", c.link.boost.i_ref),
        CHAOSLINK_NUM("boost.t_clk", c.link.boost.t_clk),
        CHAOSLINK_NUM("ramp.v_lower", c.link.ramp.v_lower),
        CHAOSLINK_NUM("ramp.v_upper", c.link.ramp.v_upper),
        CHAOSLINK_NUM("ramp.frequency", c.link.ramp.frequency),
        {"ramp.shape",
         [](RunConfig &c, const std::string &v, const Path &) {
           c.link.ramp.shape = one_of("ramp.shape", v, {"triangle", "sawtooth"}) == "triangle"
                                   ? RampShape::Triangle
                                   : RampShape::Sawtooth;
         },
         [](const RunConfig &c) {
           return std::string(c.link.ramp.shape == RampShape::Triangle ? "triangle" : "sawtooth");
         }},
        CHAOSLINK_NUM("ramp.phase_offset", c.link.ramp.phase_offset),
        CHAOSLINK_NUM("gains.g1", c.link.gains.g1),
        CHAOSLINK_NUM("gains.g2", c.link.gains.g2),
        CHAOSLINK_NUM("integrator.step", c.link.integrator.step),
        CHAOSLINK_NUM("integrator.event_tolerance", c.link.integrator.event_tolerance),
        integer<int>("integrator.max_bisections",
                     [](auto &c) -> auto & { return c.link.integrator.max_bisections; }),
        CHAOSLINK_NUM("link.duration", c.link.duration),
        CHAOSLINK_NUM("link.sample_step", c.link.sample_step),
        CHAOSLINK_NUM("link.transient_cut", c.link.transient_cut),
        CHAOSLINK_NUM("link.rx_state_offset", c.link.rx_state_offset),
        CHAOSLINK_NUM("initial.buck.i", c.link.initial.buck.i),
        CHAOSLINK_NUM("initial.buck.v_io", c.link.initial.buck.v_io),
        CHAOSLINK_NUM("initial.boost.i", c.link.initial.boost.i),
        CHAOSLINK_NUM("initial.boost.v_c", c.link.initial.boost.v_c),
        {"message.kind",
         [](RunConfig &c, const std::string &v, const Path &) {
           c.message.kind = one_of("message.kind", v, {"silence", "sine", "triangle", "sampled"});
         },
         [](const RunConfig &c) { return c.message.kind; }},
        CHAOSLINK_NUM("message.amplitude", c.message.amplitude),
        CHAOSLINK_NUM("message.frequency", c.message.frequency),
        CHAOSLINK_NUM("message.phase", c.message.phase),
        {"message.file",
         [](RunConfig &c, const std::string &v, const Path &base) {
           c.message.file = v;
           c.message.samples = {};
           if (v.empty()) return;
           const Path p = Path(v).is_absolute() ? Path(v) : base / v;
           try {
             c.message.samples = read_waveform_csv(p);
           } catch (const DomainError &e) {
             throw ConfigError("message.file", e.what());
           }
         },
         [](const RunConfig &c) { return c.message.file; }},
        {"channel.kind",
         [](RunConfig &c, const std::string &v, const Path &) {
           c.channel.kind = one_of("channel.kind", v, {"ideal", "awgn"});
         },
         [](const RunConfig &c) { return c.channel.kind; }},
        CHAOSLINK_NUM("channel.sigma", c.channel.sigma),
        integer<std::uint64_t>("channel.seed",
                               [](auto &c) -> auto & { return c.channel.seed; }),
        {"analysis.system",
         [](RunConfig &c, const std::string &v, const Path &) {
           try {
             c.system = parse_system_kind(v);
           } catch (const ConfigError &e) {
             throw ConfigError("analysis.system", e.what());
           }
         },
         [](const RunConfig &c) { return to_string(c.system); }},
        integer<int>("analysis.steps_per_period",
                     [](auto &c) -> auto & { return c.analysis.steps_per_period; }),
        CHAOSLINK_NUM("analysis.transient_periods", c.analysis.transient_periods),
        integer<std::int64_t>("analysis.section_samples",
                              [](auto &c) -> auto & { return c.analysis.section_samples; }),
        {"sweep.parameter",
         [](RunConfig &c, const std::string &v, const Path &) { c.sweep_parameter = v; },
         [](const RunConfig &c) { return c.sweep_parameter; }},
        CHAOSLINK_NUM("sweep.lo", c.sweep_lo),
        CHAOSLINK_NUM("sweep.hi", c.sweep_hi),
        integer<int>("sweep.n_points", [](auto &c) -> auto & { return c.sweep_points; }),
        CHAOSLINK_NUM("lyapunov.epsilon0", c.lyapunov.epsilon0),
        CHAOSLINK_NUM("lyapunov.renorm_periods", c.lyapunov.renorm_periods),
        CHAOSLINK_NUM("lyapunov.horizon_periods", c.lyapunov.horizon_periods),
        {"lyapunov.direction",
         [](RunConfig &c, const std::string &v, const Path &) {
           c.lyapunov.direction = to_list("lyapunov.direction", v);
         },
         [](const RunConfig &c) { return from_list(c.lyapunov.direction); }},
        {"sensitivity.parameter",
         [](RunConfig &c, const std::string &v, const Path &) { c.sensitivity_parameter = v; },
         [](const RunConfig &c) { return c.sensitivity_parameter; }},
        {"sensitivity.deltas",
         [](RunConfig &c, const std::string &v, const Path &) {
           c.sensitivity_deltas = to_list("sensitivity.deltas", v);
         },
         [](const RunConfig &c) { return from_list(c.sensitivity_deltas); }},
    };
    return t;
  }();
  return table;
}

#undef CHAOSLINK_NUM

const Entry &find_entry(const std::string &key) {
  for (const auto &e : entries())
    if (e.key == key) return e;
  throw ConfigError(key, "unknown key");
}

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

} // namespace

MessageSource RunConfig::message_source() const {
  if (message.kind == "silence") return Silence{};
  if (message.kind == "sine") return SineMessage{message.amplitude, message.frequency, message.phase};
  if (message.kind == "triangle") return TriangleMessage{message.amplitude, message.frequency};
  if (message.kind == "sampled") {
    if (message.file.empty()) throw ConfigError("message.file", "required for message.kind = sampled");
    return SampledMessage{message.samples.step, message.samples.samples};
  }
  throw ConfigError("message.kind", "unknown kind '" + message.kind + "'");
}

ChannelModel RunConfig::channel_model() const {
  if (channel.kind == "awgn") return AwgnChannel{channel.sigma, channel.seed};
  return IdealChannel{};
}

SweepRequest RunConfig::sweep_request() const {
  SweepRequest r;
  r.system = system;
  r.parameter = sweep_parameter;
  r.lo = sweep_lo;
  r.hi = sweep_hi;
  r.n_points = sweep_points;
  r.point = link;
  r.settings = analysis;
  return r;
}

void RunConfig::validate() const {
  link.validate();
  chaoslink::validate(message_source());
  chaoslink::validate(AwgnChannel{channel.sigma, channel.seed});
  analysis.validate();
  lyapunov.validate();
  if (!lyapunov.direction.empty() &&
      lyapunov.direction.size() != (system == SystemKind::Transmitter ? 4u : 2u))
    throw ConfigError("lyapunov.direction", "needs one entry per state component");
  sweep_request().validate();
  const auto &names = perturbable_parameters();
  if (std::find(names.begin(), names.end(), sensitivity_parameter) == names.end())
    throw ConfigError("sensitivity.parameter",
                      "'" + sensitivity_parameter + "' is not a receiver parameter");
  for (double d : sensitivity_deltas)
    if (!(d > -1.0) || !std::isfinite(d))
      throw ConfigError("sensitivity.deltas", "each delta must be finite and above -1");
}

const std::vector<std::string> &config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto &e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void set_config_value(RunConfig &cfg, const std::string &key, const std::string &value,
                      const std::filesystem::path &base) {
  find_entry(key).set(cfg, value, base);
}

std::string get_config_value(const RunConfig &cfg, const std::string &key) {
  return find_entry(key).get(cfg);
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig &cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto &e : entries()) out.emplace_back(e.key, e.get(cfg));
  return out;
}

RunConfig parse_config(const std::string &text, const std::filesystem::path &base) {
  RunConfig cfg;
  std::set<std::string> seen;
  bool initial_given = false;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError("", where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", where + "missing key");
    if (!seen.insert(key).second) throw ConfigError(key, where + "given twice");
    try {
      set_config_value(cfg, key, value, base);
    } catch (const ConfigError &e) {
      throw ConfigError(key, where + e.what());
    }
    if (key.rfind("initial.", 0) == 0) initial_given = true;
  }
  // The default start precharges the boost capacitor to the configured input.
  if (!initial_given) cfg.link.initial = reference_initial(cfg.link.boost);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path &path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DomainError &e) {
    throw ConfigError("", e.what());
  }
  return parse_config(text, path.parent_path());
}

void apply_override(RunConfig &cfg, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("", "override must be key=value: '" + assignment + "'");
  set_config_value(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  cfg.validate();
}

std::string format_config(const RunConfig &cfg) {
  std::string out;
  for (const auto &[k, v] : config_entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

void save_config(const RunConfig &cfg, const std::filesystem::path &path) {
  write_text_file(path, format_config(cfg));
}

} // namespace chaoslink

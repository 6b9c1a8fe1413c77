#include "chaoslink/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "chaoslink/error.hpp"

namespace chaoslink {

namespace {

std::vector<std::string> split_lines(const std::string &text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

std::pair<std::string, std::string> split_row(const std::string &line, std::size_t row) {
  const auto comma = line.find(',');
  if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
    throw DomainError("row " + std::to_string(row) + ": expected two comma-separated fields");
  return {line.substr(0, comma), line.substr(comma + 1)};
}

double parse_field(const std::string &field, std::size_t row) {
  try {
    return parse_double(field);
  } catch (const DomainError &) {
    throw DomainError("row " + std::to_string(row) + ": cannot parse '" + field + "'");
  }
}

bool uniform_with(double t0, double step, const std::vector<double> &t) {
  for (std::size_t n = 0; n < t.size(); ++n)
    if (t0 + static_cast<double>(n) * step != t[n]) return false;
  return true;
}

// The double step that regenerates every time stamp as t0 + n * step.
double recover_step(const std::vector<double> &t) {
  const double t0 = t.front();
  const double guesses[] = {(t.back() - t0) / static_cast<double>(t.size() - 1), t[1] - t0};
  for (double guess : guesses) {
    if (!(guess > 0.0) || !std::isfinite(guess)) continue;
    double up = guess;
    double down = guess;
    for (int k = 0; k < 512; ++k) {
      if (uniform_with(t0, up, t)) return up;
      if (uniform_with(t0, down, t)) return down;
      up = std::nextafter(up, HUGE_VAL);
      down = std::nextafter(down, 0.0);
    }
  }
  throw DomainError("t column is not uniformly spaced");
}

} // namespace

std::string format_double(double v) {
  if (v == 0.0) return std::signbit(v) ? "-0.00000000000000000" : "0.00000000000000000";
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%#.17g", v);
  return buf;
}

double parse_double(const std::string &text) {
  double v = 0.0;
  const char *first = text.data();
  const char *last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last)
    throw DomainError("not a number: '" + text + "'");
  return v;
}

std::string format_waveform_csv(const Waveform &wf) {
  std::string out = "t,value\n";
  for (std::size_t n = 0; n < wf.size(); ++n) {
    out += format_double(wf.time(n));
    out += ',';
    out += format_double(wf.samples[n]);
    out += '\n';
  }
  return out;
}

void write_waveform_csv(const Waveform &wf, const std::filesystem::path &path) {
  write_text_file(path, format_waveform_csv(wf));
}

Waveform parse_waveform_csv(const std::string &text, std::optional<double> single_step) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != "t,value") throw DomainError("row 1: missing header 't,value'");
  std::vector<double> t;
  Waveform wf;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const std::size_t row = n + 1;
    const auto [a, b] = split_row(lines[n], row);
    t.push_back(parse_field(a, row));
    wf.samples.push_back(parse_field(b, row));
  }
  if (t.empty()) throw DomainError("no samples");
  wf.t0 = t.front();
  if (t.size() == 1) {
    wf.step = single_step.value_or(1.0);
    if (!(wf.step > 0.0)) throw DomainError("step must be positive");
  } else {
    wf.step = recover_step(t);
  }
  return wf;
}

Waveform read_waveform_csv(const std::filesystem::path &path, std::optional<double> single_step) {
  try {
    return parse_waveform_csv(read_text_file(path), single_step);
  } catch (const DomainError &e) {
    throw DomainError(path.string() + ": " + e.what());
  }
}

void write_bifurcation_csv(const BifurcationData &d, const std::filesystem::path &path) {
  std::string out = "parameter,sample\n";
  for (std::size_t n = 0; n < d.values.size(); ++n) {
    const std::string p = format_double(d.values[n]) + ',';
    if (d.flagged[n]) {
      out += p + "nan\n";
      continue;
    }
    for (double s : d.samples[n]) out += p + format_double(s) + '\n';
  }
  write_text_file(path, out);
}

BifurcationData read_bifurcation_csv(const std::filesystem::path &path) {
  const auto lines = split_lines(read_text_file(path));
  if (lines.empty() || lines.front() != "parameter,sample")
    throw DomainError(path.string() + ": row 1: missing header 'parameter,sample'");
  BifurcationData d;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const auto [a, b] = split_row(lines[n], n + 1);
    const double p = parse_field(a, n + 1);
    const double s = parse_field(b, n + 1);
    if (d.values.empty() || d.values.back() != p) {
      if (!d.values.empty() && !(p > d.values.back()))
        throw DomainError(path.string() + ": row " + std::to_string(n + 1) +
                          ": parameter values must increase");
      d.values.push_back(p);
      d.samples.emplace_back();
      d.flagged.push_back(false);
    }
    if (std::isnan(s))
      d.flagged.back() = true;
    else
      d.samples.back().push_back(s);
  }
  return d;
}

void write_trajectory_csv(const std::vector<double> &t, const std::vector<std::array<double, 2>> &x,
                          const std::filesystem::path &path) {
  if (t.size() != x.size()) throw DomainError("write_trajectory_csv: size mismatch");
  std::string out = "t,i,v\n";
  for (std::size_t n = 0; n < t.size(); ++n)
    out += format_double(t[n]) + ',' + format_double(x[n][0]) + ',' + format_double(x[n][1]) + '\n';
  write_text_file(path, out);
}

void write_sensitivity_csv(const std::vector<MismatchPoint> &points,
                           const std::filesystem::path &path) {
  std::string out = "delta,rmse,relative_rmse,correlation,snr_db\n";
  for (const auto &p : points) {
    const auto &m = p.metrics;
    out += format_double(p.delta) + ',' + format_double(m.rmse) + ',' +
           format_double(m.relative_rmse) + ',' + format_double(m.correlation) + ',' +
           format_double(m.snr_db) + '\n';
  }
  write_text_file(path, out);
}

void write_manifest(const RunManifest &m, const std::filesystem::path &dir) {
  for (const auto &name : m.outputs) {
    const auto p = dir / name;
    if (!std::filesystem::exists(p) || std::filesystem::file_size(p) == 0)
      throw DomainError("manifest output missing or empty: " + p.string());
  }
  nlohmann::ordered_json j;
  j["tool_version"] = m.tool_version;
  j["command"] = m.command;
  j["channel_seed"] = m.channel_seed;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto &[k, v] : m.config) cfg[k] = v;
  j["config"] = cfg;
  j["outputs"] = m.outputs;
  nlohmann::ordered_json res = nlohmann::ordered_json::object();
  for (const auto &[k, v] : m.results) res[k] = v;
  j["results"] = res;
  j["wall_seconds"] = m.wall_seconds;
  write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path &path) {
  const auto j = nlohmann::ordered_json::parse(read_text_file(path));
  RunManifest m;
  m.tool_version = j.at("tool_version").get<std::string>();
  m.command = j.at("command").get<std::string>();
  m.channel_seed = j.at("channel_seed").get<std::uint64_t>();
  for (const auto &[k, v] : j.at("config").items()) m.config.emplace_back(k, v.get<std::string>());
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  for (const auto &[k, v] : j.at("results").items()) m.results.emplace_back(k, v.get<std::string>());
  m.wall_seconds = j.at("wall_seconds").get<double>();
  return m;
}

std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DomainError("cannot write " + path.string());
  out << text;
  if (!out) throw DomainError("write failed: " + path.string());
}

} // namespace chaoslink

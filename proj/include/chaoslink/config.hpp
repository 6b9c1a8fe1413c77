#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "chaoslink/analysis.hpp"
#include "chaoslink/channel.hpp"
#include "chaoslink/link.hpp"
#include "chaoslink/waveform.hpp"

namespace chaoslink {

// message.kind selects which of the fields below are used.
struct MessageSpec {
  std::string kind = "sine"; // silence | sine | triangle | sampled
  double amplitude = 0.5;
  double frequency = 50.0;
  double phase = 0.0;
  std::string file;        // waveform CSV for sampled, as written in the config
  Waveform samples;        // loaded from file
};

struct ChannelSpec {
  std::string kind = "ideal"; // ideal | awgn
  double sigma = 0.0;
  std::uint64_t seed = 42;
};

/// Everything a CLI run needs, as read from a flat key = value file.
struct RunConfig {
  LinkConfig link;
  MessageSpec message;
  ChannelSpec channel;
  SystemKind system = SystemKind::Boost; // bifurcate, lyapunov
  AnalysisSettings analysis;
  std::string sweep_parameter = "boost.i_ref";
  double sweep_lo = 0.5;
  double sweep_hi = 4.0;
  int sweep_points = 351;
  LyapunovSettings lyapunov;
  std::string sensitivity_parameter = "boost.l";
  std::vector<double> sensitivity_deltas{0.0, 0.01, 0.02, 0.05};

  MessageSource message_source() const;
  ChannelModel channel_model() const;
  SweepRequest sweep_request() const;
  void validate() const;
};

/// Every accepted key, in file order.
const std::vector<std::string> &config_keys();

/// Sets one key from its text value. Throws ConfigError naming the key.
/// Relative message.file paths resolve against `base`.
void set_config_value(RunConfig &cfg, const std::string &key, const std::string &value,
                      const std::filesystem::path &base = {});

/// Value of one key as written by save_config.
std::string get_config_value(const RunConfig &cfg, const std::string &key);

/// All keys with their resolved values, in config_keys() order.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig &cfg);

/// Parses `key = value` lines; `#` starts a comment, blank lines are
/// skipped, keys may appear once. Missing keys keep their defaults. The
/// result is validated.
RunConfig parse_config(const std::string &text, const std::filesystem::path &base = {});
RunConfig load_config(const std::filesystem::path &path);

/// Applies one `key=value` override and revalidates.
void apply_override(RunConfig &cfg, const std::string &assignment);

std::string format_config(const RunConfig &cfg);
void save_config(const RunConfig &cfg, const std::filesystem::path &path);

} // namespace chaoslink

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chaoslink/analysis.hpp"
#include "chaoslink/waveform.hpp"

namespace chaoslink {

/// Decimal text with 17 significant digits that parses back to v exactly;
/// zero is written as 0.00000000000000000.
std::string format_double(double v);

/// Parses the whole of `text` as a double; throws DomainError otherwise.
double parse_double(const std::string &text);

/// Header `t,value`, then one `t,value` row per sample, `\n` line endings.
void write_waveform_csv(const Waveform &wf, const std::filesystem::path &path);
std::string format_waveform_csv(const Waveform &wf);

/// Inverse of write_waveform_csv. The step is recovered from the t column:
/// exactly when t0 = 0, otherwise as a step that reproduces every t. A
/// one-row file carries no step, so `single_step` supplies it (1.0 when
/// absent). Malformed rows raise DomainError with the file line number.
Waveform read_waveform_csv(const std::filesystem::path &path,
                           std::optional<double> single_step = std::nullopt);
Waveform parse_waveform_csv(const std::string &text, std::optional<double> single_step = std::nullopt);

/// Header `parameter,sample`, one row per recorded sample; a flagged
/// parameter value gets a single row with sample `nan`.
void write_bifurcation_csv(const BifurcationData &d, const std::filesystem::path &path);
BifurcationData read_bifurcation_csv(const std::filesystem::path &path);

/// Header `t,i,v`, one row per state sample.
void write_trajectory_csv(const std::vector<double> &t, const std::vector<std::array<double, 2>> &x,
                          const std::filesystem::path &path);

/// Header `delta,rmse,relative_rmse,correlation,snr_db`.
void write_sensitivity_csv(const std::vector<MismatchPoint> &points,
                           const std::filesystem::path &path);

struct RunManifest {
  std::string tool_version;
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;
  std::uint64_t channel_seed = 0;
  std::vector<std::string> outputs; // file names relative to the manifest
  std::vector<std::pair<std::string, std::string>> results; // scalar outcomes
  double wall_seconds = 0.0;
};

/// Writes manifest.json. Every listed output must exist next to it and be
/// non-empty; otherwise DomainError.
void write_manifest(const RunManifest &m, const std::filesystem::path &dir);
RunManifest read_manifest(const std::filesystem::path &path);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, const std::string &text);

} // namespace chaoslink

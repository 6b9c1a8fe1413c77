#pragma once

#include <cstddef>
#include <vector>

namespace chaoslink {

/// Uniformly sampled signal: samples[n] is the value at t0 + n * step.
struct Waveform {
  double t0 = 0.0;
  double step = 1.0;
  std::vector<double> samples;

  std::size_t size() const { return samples.size(); }
  double time(std::size_t n) const { return t0 + static_cast<double>(n) * step; }
  bool operator==(const Waveform &) const = default;
};

} // namespace chaoslink

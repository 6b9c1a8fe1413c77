#include "chaoslink/channel.hpp"

#include <cmath>
#include <numbers>

#include "chaoslink/error.hpp"

namespace chaoslink {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double gaussian_draw(std::uint64_t seed, std::uint64_t index) {
  constexpr double scale = 0x1.0p-53;
  const std::uint64_t key = splitmix64(seed);
  const double u1 = (static_cast<double>(splitmix64(key ^ (2 * index)) >> 11) + 0.5) * scale;
  const double u2 = static_cast<double>(splitmix64(key ^ (2 * index + 1)) >> 11) * scale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double channel_apply(const ChannelModel &ch, double sample, std::uint64_t index) {
  if (const auto *awgn = std::get_if<AwgnChannel>(&ch)) {
    if (awgn->sigma == 0.0) return sample;
    return sample + awgn->sigma * gaussian_draw(awgn->seed, index);
  }
  return sample;
}

void validate(const ChannelModel &ch) {
  if (const auto *awgn = std::get_if<AwgnChannel>(&ch)) {
    if (!(awgn->sigma >= 0.0) || !std::isfinite(awgn->sigma))
      throw ConfigError("channel.sigma", "must be finite and >= 0");
  }
}

} // namespace chaoslink

#pragma once

#include <cstdint>
#include <variant>

namespace chaoslink {

struct IdealChannel {};

/// Additive white Gaussian noise. The draw for sample `index` depends only on
/// (seed, index):
///   k  = splitmix64(seed)
///   u1 = (splitmix64(k ^ (2*index))     >> 11 + 0.5) * 2^-53   in (0, 1)
///   u2 = (splitmix64(k ^ (2*index + 1)) >> 11)       * 2^-53   in [0, 1)
///   n  = sigma * sqrt(-2 ln u1) * cos(2 pi u2)
struct AwgnChannel {
  double sigma = 0.0;
  std::uint64_t seed = 42;
};

using ChannelModel = std::variant<IdealChannel, AwgnChannel>;

std::uint64_t splitmix64(std::uint64_t x);

/// Standard normal draw fully determined by (seed, index).
double gaussian_draw(std::uint64_t seed, std::uint64_t index);

double channel_apply(const ChannelModel &ch, double sample, std::uint64_t index);

void validate(const ChannelModel &ch);

} // namespace chaoslink

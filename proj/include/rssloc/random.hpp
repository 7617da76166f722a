#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rssloc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream purposes. Values are part of the reproducibility contract; append only.
enum class StreamPurpose : std::uint64_t {
  init = 1,
  measurements = 2,
  alpha_draw = 3,
  belief_update = 4,
  geometry = 5,
  demo = 6,
  bench = 7,
};

/// Independent generator for (master seed, purpose, tags...). The same inputs
/// always give the same stream, regardless of scheduling order.
inline Rng make_stream(std::uint64_t master, StreamPurpose purpose,
                       std::initializer_list<std::uint64_t> tags = {})
{
  std::uint64_t h = splitmix64(master ^ 0x6a09e667f3bcc909ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  for (auto t : tags)
    h = splitmix64(h ^ (t + 0x3c6ef372fe94f82bULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng)
{
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace rssloc

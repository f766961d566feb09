#pragma once

#include <cstdint>

namespace reopt {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based generator. Every draw is a pure function of
// (seed, stream, counter):
//
//   key      = mix64(seed ^ mix64(stream * 0x9e3779b97f4a7c15 + 1))
//   bits(k)  = mix64(key + k * 0x9e3779b97f4a7c15)
//   uniform  = (bits >> 11) * 2^-53             in [0, 1)
//
// Streams are derived per (field, a, b) with make_stream() so that the value
// of a field never depends on which other fields were drawn before it.
class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ mix64(stream * kGolden + 1))) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return mix64(key_ + counter * kGolden);
  }

  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  double uniform(std::uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * uniform(counter);
  }

  // Inclusive integer range [lo, hi].
  std::int64_t integer(std::uint64_t counter, std::int64_t lo, std::int64_t hi) const {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(bits(counter) % span);
  }

 private:
  std::uint64_t key_;
};

constexpr std::uint64_t make_stream(std::uint32_t field, std::uint32_t a = 0, std::uint32_t b = 0) {
  return (static_cast<std::uint64_t>(field) << 40) ^ (static_cast<std::uint64_t>(a) << 20) ^ b;
}

}  // namespace reopt

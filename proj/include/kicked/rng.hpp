#pragma once

#include <cstdint>

namespace kicked {

// Counter-based pseudorandom primitives. Every draw is a pure function of
// (seed, stream, counter), so evaluation order never matters: phases can be
// queried lazily, trajectories can run in parallel, and re-runs are
// bit-identical on any schedule.
namespace rng {

/// SplitMix64 finalizer; bijective avalanche on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// Hash two words into one; each input is decorrelated before combining.
constexpr std::uint64_t hash2(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(mix64(a + kGolden) ^ (b + kGolden));
}

constexpr std::uint64_t hash3(std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) noexcept {
  return mix64(hash2(a, b) ^ (c + kGolden));
}

/// Map a 64-bit word to a double in [0, 1) using the top 53 bits.
constexpr double to_unit(std::uint64_t x) noexcept {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// One uniform double in [0, 1) for the given (seed, stream, counter) triple.
constexpr double uniform_unit(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t counter) noexcept {
  return to_unit(hash3(seed, stream, counter));
}

// Domain-separation tags so distinct uses of one master seed never collide.
constexpr std::uint64_t kStaticPhaseStream = 0x5354415450485345ULL;
constexpr std::uint64_t kPerStepPhaseStream = 0x5045525354455050ULL;
constexpr std::uint64_t kClassicalInitStream = 0x434c415353494e49ULL;
constexpr std::uint64_t kTrajectoryStream = 0x5452414a45435452ULL;
constexpr std::uint64_t kSweepCellStream = 0x5357454550434c4cULL;
constexpr std::uint64_t kPhaseSeedStream = 0x5048415345534544ULL;

}  // namespace rng

/// Sequential counter-based generator: a keyed counter walked one draw at a
/// time. `split` derives an independent child stream from the same key space.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(rng::hash2(seed, stream)) {}

  std::uint64_t next_u64() noexcept {
    return rng::mix64(key_ ^ (counter_++ + rng::kGolden));
  }

  /// Uniform double in [0, 1).
  double next_unit() noexcept { return rng::to_unit(next_u64()); }

  CounterRng split(std::uint64_t child) const noexcept {
    return CounterRng(key_, child);
  }

  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace kicked

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace bmlab {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// A draw is a pure function of (key, counter). The artifact keys every
/// generator by the user seed and splits the 128-bit counter as
///
///   word 3    purpose tag (which consumer: path steps, bridges, MC blocks ...)
///   word 2    substream (base segment index, sample block index, ...)
///   words 0-1 position within the substream (advanced per block)
///
/// so that two consumers with different (purpose, substream) pairs never
/// share a block, regardless of how many draws either makes.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  static Block generate(std::uint64_t key, const Block& counter) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    Block c = counter;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
      k0 += kW0;
      k1 += kW1;
    }
    return c;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

/// Purpose tags for the counter's top word.
enum class Purpose : std::uint32_t {
  kPathSteps = 1,
  kKillTime = 2,
  kBridge = 3,
  kMonteCarlo = 4,
  kShuffle = 5,
  kSweep = 6,
  kBootstrap = 7,
};

/// Sequential stream over one (seed, purpose, substream) triple.
class Rng {
 public:
  Rng(std::uint64_t seed, Purpose purpose, std::uint32_t substream = 0,
      std::uint64_t position = 0)
      : key_(seed),
        purpose_(static_cast<std::uint32_t>(purpose)),
        substream_(substream),
        position_(position) {}

  /// One full Philox block at the current position; advances by one.
  Philox4x32::Block next_block() {
    const Philox4x32::Block ctr{static_cast<std::uint32_t>(position_),
                                static_cast<std::uint32_t>(position_ >> 32),
                                substream_, purpose_};
    ++position_;
    return Philox4x32::generate(key_, ctr);
  }

  std::uint64_t next_u64() {
    if (cursor_ >= 4) refill();
    const std::uint64_t lo = buffer_[cursor_++];
    const std::uint64_t hi = buffer_[cursor_++];
    return lo | (hi << 32);
  }

  /// Uniform on the open interval (0, 1) with 52-bit resolution.
  double uniform() { return to_open_unit(next_u64()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
      const std::uint64_t v = next_u64();
      if (v < limit) return v % n;
    }
  }

  /// Standard normal pair from one Philox block (Box-Muller).
  std::array<double, 2> normal_pair() {
    const auto b = next_block();
    return box_muller(b);
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const auto pair = normal_pair();
    spare_ = pair[1];
    has_spare_ = true;
    return pair[0];
  }

  double exponential() { return -std::log(uniform()); }

  std::uint64_t position() const { return position_; }

  static double to_open_unit(std::uint64_t v) {
    return (static_cast<double>(v >> 12) + 0.5) * 0x1.0p-52;
  }

  static std::array<double, 2> box_muller(const Philox4x32::Block& b) {
    const double u1 = to_open_unit(b[0] | (std::uint64_t{b[1]} << 32));
    const double u2 = to_open_unit(b[2] | (std::uint64_t{b[3]} << 32));
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

 private:
  void refill() {
    buffer_ = next_block();
    cursor_ = 0;
  }

  std::uint64_t key_;
  std::uint32_t purpose_;
  std::uint32_t substream_;
  std::uint64_t position_;
  Philox4x32::Block buffer_{};
  int cursor_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Mixes a run seed with an index into an independent 64-bit seed
/// (splitmix64 finalizer); used for per-run and per-parameter-point seeds.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace bmlab

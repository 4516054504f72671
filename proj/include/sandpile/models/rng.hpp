#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace sandpile {

/// Philox4x32-10 counter-based generator (Salmon et al.): a keyed bijection of a
/// 128-bit counter, so any draw can be produced without stepping the others.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t multiplier0 = 0xD2511F53;
  static constexpr std::uint32_t multiplier1 = 0xCD9E8D57;
  static constexpr std::uint32_t weyl0 = 0x9E3779B9;
  static constexpr std::uint32_t weyl1 = 0xBB67AE85;
  static constexpr int rounds = 10;

  static Counter block(Counter ctr, Key key) {
    for (int r = 0; r < rounds; ++r) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(multiplier0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(multiplier1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += weyl0;
      key[1] += weyl1;
    }
    return ctr;
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream families derived from one master seed.
enum class StreamTag : std::uint64_t { graph = 1, matrix = 2 };

/// The draws belonging to one sample: key = hash(master seed, tag), counter =
/// (draw index, sample index). Reproducible on any platform and thread.
class SampleStream {
public:
  SampleStream(std::uint64_t master_seed, StreamTag tag, std::uint64_t sample_index)
      : sample_(sample_index) {
    std::uint64_t k = splitmix64(master_seed ^ splitmix64(static_cast<std::uint64_t>(tag)));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  }

  std::uint64_t next_u64() {
    if (buffered_ == 0) refill();
    --buffered_;
    return buffer_[buffered_];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double q) { return uniform01() < q; }

  /// Uniform on [0, n) by rejection, so no modulo bias.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below(0)");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    for (;;) {
      std::uint64_t x = next_u64();
      if (x <= limit) return x % n;
    }
  }

private:
  void refill() {
    Philox4x32::Counter ctr{static_cast<std::uint32_t>(draw_), static_cast<std::uint32_t>(draw_ >> 32),
                            static_cast<std::uint32_t>(sample_), static_cast<std::uint32_t>(sample_ >> 32)};
    auto out = Philox4x32::block(ctr, key_);
    ++draw_;
    // Consumed back to front by next_u64.
    buffer_[1] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[0] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    buffered_ = 2;
  }

  Philox4x32::Key key_{};
  std::uint64_t sample_;
  std::uint64_t draw_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

} // namespace sandpile

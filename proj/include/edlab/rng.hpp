// Counter-based random numbers: Philox4x32-10 keyed by the run seed, with
// the counter built from (walker, step, purpose). Any walker's draw at any
// step can be regenerated independently of thread scheduling.

#ifndef EDLAB_RNG_HPP_
#define EDLAB_RNG_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace edlab {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

enum class StreamPurpose : std::uint32_t { stepping = 0, initial_sampling = 1, test = 2 };

/// Random stream of one walker: every draw is a pure function of
/// (seed, walker, step, block, purpose).
class WalkerStream {
 public:
  WalkerStream(std::uint64_t seed, std::uint64_t walker, StreamPurpose purpose)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        walker_(walker),
        purpose_(static_cast<std::uint32_t>(purpose)) {}

  /// Four raw 32-bit words for (step, block).
  Philox4x32::Counter raw(std::uint64_t step, std::uint32_t block = 0) const {
    const Philox4x32::Counter ctr{
        static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
        static_cast<std::uint32_t>(walker_),
        (static_cast<std::uint32_t>(walker_ >> 32) & 0xFFFFu) | ((block & 0xFFu) << 16) |
            (purpose_ << 24)};
    return Philox4x32::apply(ctr, key_);
  }

  /// Two uniforms: the first in (0, 1], the second in [0, 1), 53-bit each.
  std::array<double, 2> uniforms(std::uint64_t step, std::uint32_t block = 0) const {
    const auto w = raw(step, block);
    const std::uint64_t a = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
    const std::uint64_t b = (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
    constexpr double scale = 0x1.0p-53;
    return {(static_cast<double>(a >> 11) + 1.0) * scale, static_cast<double>(b >> 11) * scale};
  }

  /// Two independent standard normals (Box-Muller).
  std::array<double, 2> normals(std::uint64_t step, std::uint32_t block = 0) const {
    const auto u = uniforms(step, block);
    const double r = std::sqrt(-2.0 * std::log(u[0]));
    const double t = 2.0 * std::numbers::pi * u[1];
    return {r * std::cos(t), r * std::sin(t)};
  }

 private:
  Philox4x32::Key key_;
  std::uint64_t walker_;
  std::uint32_t purpose_;
};

}  // namespace edlab

#endif  // EDLAB_RNG_HPP_

#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "bhps/core.hpp"

namespace bhps {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * c[2];
    return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
  }

  static Counter block(Counter c, Key k) {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        k[0] += 0x9E3779B9u;
        k[1] += 0xBB67AE85u;
      }
      c = round(c, k);
    }
    return c;
  }
};

/// Independent random stream identified by (seed, stream id, purpose).
///
/// The key carries the seed, the upper counter words carry the stream id and purpose,
/// the lower counter words count blocks. Streams never overlap for distinct ids.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream, std::uint32_t purpose = 0) {
    require(stream < (std::uint64_t{1} << 56), "RandomStream: stream id too large");
    key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    hi_ = {static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32) | (purpose << 24)};
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t a = next_u32();
    const std::uint64_t b = next_u32();
    return (a << 32) | b;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal via the Box-Muller transform.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    have_spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

  double exponential() { return -std::log(uniform()); }

  /// Gamma(k, 1) for integer shape k >= 1 as a sum of k exponentials.
  double gamma_int(int k) {
    require(k >= 1, "gamma_int: shape must be >= 1");
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += exponential();
    return s;
  }

  /// Beta(a, b) for integer a, b >= 1.
  double beta_int(int a, int b) {
    const double x = gamma_int(a);
    const double y = gamma_int(b);
    return x / (x + y);
  }

  cplx complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re, im};
  }

  std::uint64_t blocks_used() const { return block_; }

 private:
  void refill() {
    buf_ = Philox4x32::block({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), hi_[0], hi_[1]}, key_);
    ++block_;
    pos_ = 0;
  }

  Philox4x32::Key key_{};
  std::array<std::uint32_t, 2> hi_{};
  Philox4x32::Counter buf_{};
  std::uint64_t block_{0};
  int pos_{4};
  bool have_spare_{false};
  double spare_{0.0};
};

enum class StreamPurpose : std::uint32_t { Sampling = 1, Noise = 2, Amplitude = 3 };

inline RandomStream make_stream(std::uint64_t seed, std::uint64_t trajectory, StreamPurpose purpose) {
  return RandomStream(seed, trajectory, static_cast<std::uint32_t>(purpose));
}

}  // namespace bhps

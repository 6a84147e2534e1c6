#pragma once

#include <cmath>
#include <cstdint>

namespace bsde {

// Counter-based random stream.  A stream is identified by a key derived from
// the master seed plus up to four substream ids (iteration, interval, node,
// sample...), so draws are reproducible independently of thread scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ kInit)) {}

  RngStream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
            std::uint64_t c = 0, std::uint64_t d = 0)
      : key_(derive(seed, a, b, c, d)) {}

  std::uint64_t next_u64() { return mix(key_ + (++ctr_) * kGamma); }

  // uniform on (0,1), never exactly 0 or 1
  double uniform() {
    return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // standard normal via Box-Muller (portable, unlike std::normal_distribution)
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925287 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b, std::uint64_t c,
                              std::uint64_t d) {
    std::uint64_t k = mix(seed ^ kInit);
    k = mix(k ^ mix(a + 1 * kGamma));
    k = mix(k ^ mix(b + 2 * kGamma));
    k = mix(k ^ mix(c + 3 * kGamma));
    k = mix(k ^ mix(d + 4 * kGamma));
    return k;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kInit = 0x5851F42D4C957F2DULL;

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace bsde

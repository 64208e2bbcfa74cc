#pragma once

#include <cstdint>

namespace dualmatch {

// Counter-based random streams. Every draw is addressed by
// (experiment seed, path index, purpose, period), so a sample is
// reproducible bit-exactly regardless of thread schedule or of how
// many other draws happened before it. Arrival, service, and
// algorithm randomness live on separate streams; this is what lets
// us test that congestion-oblivious policies never react to service
// draws.
enum class StreamPurpose : std::uint32_t {
  kArrival = 1,
  kService = 2,
  kAlgorithm = 3,
};

struct StreamKey {
  std::uint64_t seed = 0;
  std::uint32_t path = 0;
  StreamPurpose purpose = StreamPurpose::kArrival;
  std::uint64_t salt = 0;  // extra discriminator, e.g. a policy id
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

class CounterRng {
 public:
  CounterRng(const StreamKey& key, std::uint64_t period) {
    std::uint64_t h = detail::splitmix64(key.seed);
    h = detail::splitmix64(h ^ (static_cast<std::uint64_t>(key.path) << 3 |
                                static_cast<std::uint64_t>(key.purpose)));
    h = detail::splitmix64(h ^ key.salt);
    state_ = detail::splitmix64(h ^ period);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Uniform on [0,1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  // Uniform integer in [0, n), n >= 1.
  std::uint64_t next_below(std::uint64_t n) {
    return next_u64() % n;
  }

 private:
  std::uint64_t state_;
};

}  // namespace dualmatch

#pragma once

// Counter-based random streams. Every value is a pure function of
// (key, counter), so a stream is reproducible across runs and platforms and
// independent substreams come from hashing labels into the key.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <type_traits>

namespace etpareto {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t hash_combine(std::uint64_t key, std::uint64_t label) noexcept {
  return splitmix64(key ^ splitmix64(label + 0x632be59bd9b4e019ULL));
}

inline constexpr std::uint64_t hash_label(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), key_(splitmix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  // Independent stream keyed by (this stream's key, labels...).
  template <typename... Labels>
    requires(std::is_integral_v<Labels> && ...)
  RngStream substream(Labels... labels) const {
    RngStream s = *this;
    ((s.key_ = hash_combine(s.key_, static_cast<std::uint64_t>(labels))), ...);
    s.counter_ = 0;
    s.has_spare_ = false;
    return s;
  }
  RngStream substream(std::string_view label) const { return substream(hash_label(label)); }

  std::uint64_t next_u64() noexcept { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    // Multiply-shift; bias is < n / 2^64, negligible for the sizes used here.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Standard normal via Box-Muller.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace etpareto

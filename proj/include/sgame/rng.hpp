#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "sgame/common.hpp"

namespace sgame {

// Counter-based splittable RNG. Streams are derived, never shared: every
// stochastic call site gets RngKey::stream(tag, index), so results do not
// depend on evaluation order and reruns from the same seed are bit-identical.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal, Box-Muller; second deviate cached per stream.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Index into probs by CDF inversion. probs must sum to ~1 and be nonnegative.
  int categorical(const std::vector<double>& probs) {
    double u = uniform();
    double acc = 0.0;
    int last = -1;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
      if (probs[i] <= 0.0) continue;
      acc += probs[i];
      last = i;
      if (u < acc) return i;
    }
    if (last < 0) throw NumericsError("categorical: no positive mass");
    return last;
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

class RngKey {
 public:
  explicit RngKey(std::uint64_t seed) : key_(detail::splitmix64(seed)) {}

  RngKey child(std::string_view tag, std::uint64_t index = 0) const {
    return RngKey(derive(tag, index), true);
  }
  RngStream stream(std::string_view tag, std::uint64_t index = 0) const {
    return RngStream(derive(tag, index));
  }

 private:
  RngKey(std::uint64_t raw, bool) : key_(raw) {}
  std::uint64_t derive(std::string_view tag, std::uint64_t index) const {
    std::uint64_t h = key_ ^ detail::fnv1a(tag);
    h = detail::splitmix64(h);
    h ^= index * 0xd1342543de82ef95ULL;
    return detail::splitmix64(h);
  }
  std::uint64_t key_;
};

}  // namespace sgame

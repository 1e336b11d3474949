#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace probsarah {

// splitmix64 finalizer.  Used both as a seed expander and as the documented
// mix step for deriving per-run / per-trial streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Stream derivation: mix(mix(mix(master) ^ fnv1a64(tag)) ^ index).
// Tag-keyed, so adding a new tag never perturbs existing streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                    std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(master) ^ fnv1a64(tag)) ^ index);
}

// xoshiro256++.  Fully specified so that identical seeds give identical
// streams on every platform; no std distribution is used anywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) {
      x = splitmix64(x);
      w = x;
    }
    has_normal_ = false;
    cached_normal_ = 0.0;
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, n) by multiply-shift rejection.
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = static_cast<unsigned __int128>(next()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Standard normal via the polar method; the spare value is cached so the
  // draw order is part of the stream contract.
  double normal() {
    if (has_normal_) {
      has_normal_ = false;
      return cached_normal_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_normal_ = v * f;
    has_normal_ = true;
    return u * f;
  }

  // Uniform direction on the unit sphere.
  void fill_sphere(std::span<double> v) {
    double nsq;
    do {
      nsq = 0.0;
      for (auto& c : v) {
        c = normal();
        nsq += c * c;
      }
    } while (nsq == 0.0);
    const double inv = 1.0 / std::sqrt(nsq);
    for (auto& c : v) c *= inv;
  }

  // Uniform point in the radius-r ball.
  void fill_ball(std::span<double> v, double r) {
    fill_sphere(v);
    const double scale =
        r * std::pow(uniform01(), 1.0 / static_cast<double>(v.size()));
    for (auto& c : v) c *= scale;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  bool has_normal_;
  double cached_normal_;
};

// k distinct values from {0,..,n-1} by partial Fisher-Yates, returned in
// ascending order (stable summation order and cache-friendly access).
inline void sample_without_replacement(Rng& rng, std::uint32_t n,
                                       std::uint32_t k,
                                       std::vector<std::uint32_t>& scratch,
                                       std::vector<std::uint32_t>& out) {
  scratch.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) scratch[i] = i;
  out.resize(k);
  for (std::uint32_t i = 0; i < k; ++i) {
    const auto j =
        i + static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(scratch[i], scratch[j]);
    out[i] = scratch[i];
  }
  std::sort(out.begin(), out.end());
}

// k values from {0,..,n-1} with replacement, ascending.
inline void sample_with_replacement(Rng& rng, std::uint32_t n, std::size_t k,
                                    std::vector<std::uint32_t>& out) {
  out.resize(k);
  for (auto& v : out)
    v = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(n)));
  std::sort(out.begin(), out.end());
}

}  // namespace probsarah

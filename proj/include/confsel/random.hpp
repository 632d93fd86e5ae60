#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "confsel/error.hpp"

namespace confsel {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent child seed for `key` from `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) noexcept {
  return mix64(mix64(seed) ^ mix64(key ^ 0x632be59bd9b4e019ULL));
}

/// Top 53 bits mapped to the open interval (0, 1).
constexpr double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Counter-based uniform draw: depends only on (seed, index), so any unit's
/// value can be regenerated without replaying the stream.
constexpr double uniform_at(std::uint64_t seed, std::uint64_t index) noexcept {
  return to_open_unit(derive_seed(seed, index));
}

/// Sequential generator for data simulation. The engine is mt19937_64 (fully
/// specified by the standard); the uniform and normal transforms are done
/// here so that streams are identical across standard library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return to_open_unit(engine_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, caching the second variate.
  double normal() {
    if (spare_) {
      double z = *spare_;
      spare_.reset();
      return z;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// First `k` entries of a uniformly random permutation of 0..n-1.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    detail::require(k <= n, "cannot sample more items than the population holds");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Source of the per-unit tie-breaking uniforms U_j. Either a seeded
/// counter-based stream keyed by unit index, or an explicit list (tests,
/// hand-computed examples).
class TieBreaker {
 public:
  static TieBreaker seeded(std::uint64_t seed) {
    TieBreaker t;
    t.seed_ = seed;
    return t;
  }

  static TieBreaker fixed(std::vector<double> u) {
    for (double v : u) {
      detail::require(v >= 0.0 && v <= 1.0, "tie-breaking u must lie in [0,1]");
    }
    TieBreaker t;
    t.fixed_ = std::move(u);
    return t;
  }

  double operator()(std::size_t unit) const {
    if (seed_) return uniform_at(*seed_, unit);
    detail::require(unit < fixed_.size(), "no tie-breaking value supplied for this unit");
    return fixed_[unit];
  }

  std::optional<std::uint64_t> seed() const noexcept { return seed_; }

 private:
  TieBreaker() = default;

  std::optional<std::uint64_t> seed_;
  std::vector<double> fixed_;
};

}  // namespace confsel

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace kmc {

/// Reproducible random source ("kmc-rng v1").
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are not, so every draw below is
/// defined here in terms of raw 64-bit engine outputs:
///   uniform()  = (x >> 11) * 2^-53
///   below(n)   = x % n with rejection of x >= 2^64 - (2^64 % n)
///   normal()   = Box-Muller, cosine branch, one pair of uniforms per draw
///   gamma(k)   = Marsaglia-Tsang (k >= 1), boosted by u^(1/k) for k < 1
///   beta(a, b) = Ga / (Ga + Gb)
/// Sub-streams are derived by mixing (seed, tag) through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng derive(std::uint64_t seed, std::string_view tag);
  static Rng derive(std::uint64_t seed, std::string_view tag, std::uint64_t index);

  std::uint64_t next() { return engine_(); }
  double uniform();
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();
  double gamma(double shape);
  double beta(double a, double b);

  /// Uniform sample of min(k, pool.size()) distinct elements, in draw order.
  template <class T>
  std::vector<T> sample(std::span<const T> pool, std::size_t k) {
    std::vector<T> items(pool.begin(), pool.end());
    const std::size_t take = std::min(k, items.size());
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(below(items.size() - i));
      std::swap(items[i], items[j]);
    }
    items.resize(take);
    return items;
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Stateless uniform in [0,1) keyed by (seed, a, b).
double hashed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace kmc

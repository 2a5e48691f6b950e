#pragma once

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <cstdint>
#include <initializer_list>

#include "tsci/types.hpp"

namespace tsci {

/// 64-bit Mersenne Twister. Distributions come from Boost.Random so that a
/// seed produces the same stream on every standard library; the normal
/// sampler is Boost's ziggurat implementation.
using Rng = boost::random::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for (master, tag, index...). Used for per-tree,
/// per-replicate and per-split streams so parallel schedules stay
/// deterministic.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(master);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline double standard_normal(Rng& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

inline Vector standard_normal_vector(Rng& rng, Index n) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  Vector out(n);
  for (Index i = 0; i < n; ++i) out(i) = dist(rng);
  return out;
}

/// n x cols matrix of i.i.d. standard normals, filled column by column.
inline Matrix standard_normal_matrix(Rng& rng, Index n, Index cols) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  Matrix out(n, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index i = 0; i < n; ++i) out(i, c) = dist(rng);
  return out;
}

/// Uniform integer in [lo, hi].
inline Index uniform_index(Rng& rng, Index lo, Index hi) {
  boost::random::uniform_int_distribution<Index> dist(lo, hi);
  return dist(rng);
}

}  // namespace tsci

#pragma once

#include <cstddef>
#include <cstdint>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace lbsda {

// Boost.Random distributions are implemented in headers, so a given seed
// produces the same stream on every platform (unlike <random> distributions).
using Rng = boost::random::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

inline double uniform01(Rng& rng) {
  return boost::random::uniform_01<double>{}(rng);
}

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return boost::random::uniform_int_distribution<std::size_t>{0, n - 1}(rng);
}

}  // namespace lbsda

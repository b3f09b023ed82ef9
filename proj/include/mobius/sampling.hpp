#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mobius/point_space.hpp"

namespace mobius {

using Rng = std::mt19937_64;

/// Number of ordered quadruples (x,y,z,w) over `n` points with x != w, y != z.
std::uint64_t valid_quadruple_count(std::uint64_t n);

/// Bijection [0, valid_quadruple_count(n)) -> valid quadruples, lexicographic
/// in (x, w, y, z).
Quadruple decode_quadruple(std::uint64_t n, std::uint64_t code);

/// Up to `budget` distinct valid quadruples with entries drawn from `pool`.
/// Enumerates everything when the pool admits at most `budget` quadruples,
/// otherwise draws uniformly without replacement from a generator seeded
/// with `seed`.
std::vector<Quadruple> sample_quadruples(const std::vector<Index>& pool, std::size_t budget,
                                         std::uint64_t seed);

/// Convenience overload over all points of an n-point space.
std::vector<Quadruple> sample_quadruples(std::size_t n, std::size_t budget, std::uint64_t seed);

}  // namespace mobius

#include "mobius/sampling.hpp"

#include <numeric>
#include <unordered_set>

namespace mobius {

std::uint64_t valid_quadruple_count(std::uint64_t n) {
  if (n < 2) return 0;
  return n * (n - 1) * n * (n - 1);
}

Quadruple decode_quadruple(std::uint64_t n, std::uint64_t code) {
  const std::uint64_t pairs = n * (n - 1);
  auto decode_pair = [n](std::uint64_t p, Index& first, Index& second) {
    first = static_cast<Index>(p / (n - 1));
    std::uint64_t s = p % (n - 1);
    if (s >= first) ++s;
    second = static_cast<Index>(s);
  };
  Quadruple q;
  decode_pair(code / pairs, q.x, q.w);
  decode_pair(code % pairs, q.y, q.z);
  return q;
}

std::vector<Quadruple> sample_quadruples(const std::vector<Index>& pool, std::size_t budget,
                                         std::uint64_t seed) {
  const std::uint64_t n = pool.size();
  const std::uint64_t total = valid_quadruple_count(n);
  std::vector<Quadruple> out;
  if (total == 0 || budget == 0) return out;
  auto lift = [&](Quadruple q) {
    return Quadruple{pool[q.x], pool[q.y], pool[q.z], pool[q.w]};
  };
  if (total <= budget) {
    out.reserve(total);
    for (std::uint64_t c = 0; c < total; ++c) out.push_back(lift(decode_quadruple(n, c)));
    return out;
  }
  Rng rng(seed);
  std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
  std::unordered_set<std::uint64_t> seen;
  out.reserve(budget);
  while (out.size() < budget) {
    const std::uint64_t c = pick(rng);
    if (seen.insert(c).second) out.push_back(lift(decode_quadruple(n, c)));
  }
  return out;
}

std::vector<Quadruple> sample_quadruples(std::size_t n, std::size_t budget, std::uint64_t seed) {
  std::vector<Index> pool(n);
  std::iota(pool.begin(), pool.end(), Index{0});
  return sample_quadruples(pool, budget, seed);
}

}  // namespace mobius

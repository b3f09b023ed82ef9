#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mobius/error.hpp"
#include "mobius/generate.hpp"
#include "mobius/sampling.hpp"
#include "mobius/transforms.hpp"

using namespace mobius;

namespace {

PointSpace with_infinity(PointSpace s) {
  s.add_infinity_point("inf");
  return s;
}

}  // namespace

TEST_CASE("cayley_transform: chordal example") {
  auto plane = coords_space({{0, 0}, {1, 0}, {0, 1}}, 2.0, 0);
  auto c = cayley_transform(plane, 0);
  CHECK(c.distance(1, 2) == doctest::Approx(std::sqrt(2.0)));
  CHECK(c.dist(1, 0).is_inf());
  CHECK(c.dist(2, 0).is_inf());
  CHECK(c.distance(0, 0) == 0.0);
  CHECK(c.infinity_point() == std::optional<Index>(0));
  CHECK(c.k_status() == KStatus::estimated);
  CHECK(verify_extended_metric(c).ok);
  CHECK_THROWS_AS(cayley_transform(c, 0), PreconditionError);
  CHECK_THROWS_AS(cayley_transform(c, 7), PreconditionError);
}

TEST_CASE("cayley_transform of a space that already has a point at infinity") {
  auto s = real_line_points({0, 1, 3}, GenerateOptions{true, 100}).materialized();
  const Index star = *s.infinity_point();
  auto c = cayley_transform(s, 1);
  CHECK(c.distance(0, star) == doctest::Approx(1.0));        // 1/d(0,1)
  CHECK(c.distance(2, star) == doctest::Approx(0.5));        // 1/d(3,1)
  CHECK(c.dist(star, 1).is_inf());
  CHECK(c.distance(0, 2) == doctest::Approx(3.0 / (1 * 2)));
}

TEST_CASE("inverse_cayley_transform hand values") {
  auto s = real_line_points({0, 1, 2, 3}, GenerateOptions{true, 100}).materialized();
  const Index star = *s.infinity_point();
  auto inv = inverse_cayley_transform(s, 0);
  CHECK(inv.distance(3, star) == doctest::Approx(0.25));
  CHECK(inv.distance(0, star) == doctest::Approx(1.0));
  CHECK(inv.distance(1, 2) == doctest::Approx(1.0 / 6.0));
  CHECK_FALSE(inv.infinity_point().has_value());
  CHECK_THROWS_AS(inverse_cayley_transform(random_euclidean_space(4, 2, 1), 0), PreconditionError);
  CHECK_THROWS_AS(inverse_cayley_transform(s, star), PreconditionError);
}

TEST_CASE("property: cayley transform preserves cross-ratios") {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    auto s = seed % 2 ? with_infinity(random_euclidean_space(10, 3, seed)) : random_euclidean_space(10, 2, seed);
    const Index p = seed % 10;
    auto c = cayley_transform(s, p);
    for (const auto& q : sample_quadruples(s.size(), 400, seed)) {
      auto before = cross_ratio(s, q);
      auto after = cross_ratio(c, q);
      REQUIRE(before.has_value());
      REQUIRE(after.has_value());
      if (before->is_zero() || before->is_inf()) {
        CHECK(*after == *before);
      } else {
        CHECK(std::abs(std::log(after->value()) - std::log(before->value())) <= 1e-12);
      }
    }
  }
}

TEST_CASE("property: inverse cayley is bounded and round-trips to a Moebius equivalent space") {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    auto s = with_infinity(random_euclidean_space(9, 2, seed));
    const Index star = *s.infinity_point();
    auto inv = inverse_cayley_transform(s, 0);
    for (Index x = 0; x < s.size(); ++x) {
      if (x != star) {
        CHECK(inv.distance(x, star) > 0.0);
        CHECK(inv.distance(x, star) <= 1.0);
      }
      for (Index y = 0; y < s.size(); ++y) CHECK(inv.distance(x, y) <= 1.0 + 1e-15);
    }
    auto back = cayley_transform(inv, star);
    auto rep = moebius_defect(PointMap::by_label(s, back), 2000, seed);
    CHECK(rep.defect <= 1e-10);
    CHECK(rep.admissible > 0);
  }
}

TEST_CASE("moebius_defect") {
  auto s = random_euclidean_space(8, 2, 11);
  CHECK(moebius_defect(PointMap::by_label(s, s), 5000).defect == 0.0);
  CHECK(moebius_defect(PointMap::by_label(s, cayley_transform(s, 3)), 5000).defect <= 1e-12);

  // snowflake alpha = 1/2 on (0,1,2,3): |1/2 log(4/3) - log(4/3)| = 1/2 log(4/3)
  auto line = real_line_points({0, 1, 2, 3}).materialized();
  auto flake = snowflake(line, 0.5);
  const Quadruple q = Quadruple::make(0, 1, 2, 3);
  const double contribution =
      std::abs(std::log(cross_ratio(flake, q)->value()) - std::log(cross_ratio(line, q)->value()));
  CHECK(contribution == doctest::Approx(0.5 * std::log(4.0 / 3.0)));
  CHECK(contribution == doctest::Approx(0.1438).epsilon(1e-3));
  auto rep = moebius_defect(PointMap::by_label(line, flake), 1000);
  CHECK(rep.defect >= contribution);
  REQUIRE(rep.worst.has_value());
  const Quadruple w = *rep.worst;
  CHECK(rep.defect == doctest::Approx(0.5 * std::abs(std::log(cross_ratio(line, w)->value()))));

  PointMap constant(line, line, std::vector<Index>(4, 0));
  CHECK_THROWS_WITH_AS(moebius_defect(constant, 100), "moebius_defect: no admissible quadruple",
                       PreconditionError);
  CHECK_THROWS_AS(moebius_defect(PointMap::by_label(line, line), 0), PreconditionError);
}

TEST_CASE("property: defect is symmetric under inverting a bijection") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto a = random_euclidean_space(7, 2, seed);
    auto b = random_euclidean_space(7, 3, seed + 100);
    std::vector<Index> perm(7);
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(seed));
    PointMap f(a, b, perm);
    const auto forward = moebius_defect(f, 10000);
    const auto backward = moebius_defect(f.inverse(), 10000);
    CHECK(forward.defect == doctest::Approx(backward.defect).epsilon(1e-12));
  }
}

TEST_CASE("point map CSV") {
  auto a = real_line_points({0, 1, 2}).materialized();
  std::istringstream in("source_id,target_id\n0,2\n1,1\n2,0\n");
  auto m = read_point_map_csv(in, a, a);
  CHECK(m(0) == 2);
  CHECK(m.is_bijective());
  std::ostringstream out;
  write_point_map_csv(m, out);
  CHECK(out.str() == "source_id,target_id\n0,2\n1,1\n2,0\n");
  std::istringstream partial("0,1\n");
  CHECK_THROWS_AS(read_point_map_csv(partial, a, a), ParseError);
  CHECK_THROWS_AS(PointMap(a, a, {0, 1}), PreconditionError);
}

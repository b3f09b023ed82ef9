#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mobius/cone.hpp"
#include "mobius/error.hpp"
#include "mobius/generate.hpp"
#include "mobius/sampling.hpp"

using namespace mobius;

namespace {

std::vector<Index> all_ids(const PointSpace& s) {
  std::vector<Index> v(s.size());
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

PointSpace integer_line(long long lo, long long hi, bool inf = true) {
  return real_line_grid(static_cast<double>(lo), 1.0, static_cast<std::size_t>(hi - lo + 1),
                        GenerateOptions{inf, 1000000});
}

}  // namespace

TEST_CASE("rescaled_panel examples") {
  auto s = real_line_points({0, 20, 0.3}, GenerateOptions{true, 100});
  auto cone = rescaled_panel(s, {0, 1, 3}, 10, PanelMode::cone);
  CHECK(cone.panel.distance(0, 1) == doctest::Approx(2.0));
  CHECK(cone.panel.dist(0, 2).is_inf());
  CHECK(cone.panel.infinity_point() == std::optional<Index>(2));
  auto tan = rescaled_panel(s, {0, 2}, 10, PanelMode::tangent);
  CHECK(tan.panel.distance(0, 1) == doctest::Approx(3.0));
  CHECK_THROWS_AS(rescaled_panel(s, {}, 10, PanelMode::cone), PreconditionError);
  CHECK_THROWS_AS(rescaled_panel(s, {0}, 0, PanelMode::cone), PreconditionError);
}

TEST_CASE("property: panels keep cross-ratios") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto s = random_euclidean_space(12, 3, seed);
    s.add_infinity_point();
    for (double lambda : {1e-3, 10.0, 1e6})
      for (PanelMode mode : {PanelMode::cone, PanelMode::tangent}) {
        auto panel = rescaled_panel(s, all_ids(s), lambda, mode);
        for (const auto& q : sample_quadruples(s.size(), 300, seed)) {
          auto a = cross_ratio(s, q), b = cross_ratio(panel.panel, q);
          REQUIRE(a.has_value() == b.has_value());
          if (!a || a->is_inf()) continue;
          CHECK(b->value() == doctest::Approx(a->value()).epsilon(1e-12));
        }
      }
  }
}

TEST_CASE("cone identities") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto s = random_euclidean_space(15, 2, seed);
    s.add_infinity_point();
    for (double lambda : {10.0, 1e3, 1e6}) {
      auto rep = cone_identity_check(s, 0, lambda, all_ids(s));
      CHECK(rep.max_rel_error <= 1e-12);
      CHECK(rep.entries == 2 * 14 + 2 * (14 * 13 / 2));  // p and * excluded
    }
  }
  auto no_inf = random_euclidean_space(5, 2, 1);
  CHECK_THROWS_AS(cone_identity_check(no_inf, 0, 1, {1, 2}), PreconditionError);
}

TEST_CASE("trajectory and scale parsing") {
  auto t = Trajectory::parse("gen:affine_log(1,1,0)");
  CHECK(t.at(10)[0] == doctest::Approx(10 + std::log(10.0)));
  CHECK(Trajectory::parse("gen:linear(2,1)").at(3)[0] == 7.0);
  CHECK(Trajectory::parse("gen:constant(0,0)").dim() == 2);
  CHECK(ScaleSequence::parse("lambda:linear(1)")(7) == 7.0);
  CHECK(ScaleSequence::parse("lambda:power(2,0.5)")(16) == doctest::Approx(8.0));
  CHECK_THROWS_AS(Trajectory::parse("gen:spiral(1)"), ParseError);
  CHECK_THROWS_AS(ScaleSequence::parse("linear(1)"), ParseError);

  const auto dir = std::filesystem::temp_directory_path();
  {
    std::ofstream out(dir / "mobius_traj.csv");
    out << "n,x,y\n1,1,0\n2,2,0\n5,5,1\n";
  }
  auto tab = Trajectory::parse("mobius_traj.csv", dir);
  CHECK(tab.dim() == 2);
  CHECK(tab.indices(1, 4) == std::vector<long long>{1, 2});
  CHECK(tab.at(5)[1] == 1.0);
  CHECK_THROWS_AS(tab.at(3), PreconditionError);
}

TEST_CASE("eventual_separation examples") {
  const Gauge g = Gauge::log(1, 1);
  const auto lam = ScaleSequence::linear(1);
  auto far = eventual_separation(Trajectory::linear(1, 0), Trajectory::linear(2, 0), lam, g, 1, 100000);
  CHECK(far.last_unseparated_index == std::optional<long long>(1));
  CHECK(far.first_separated_index == std::optional<long long>(2));
  CHECK(far.min_cone_distance == doctest::Approx(1.0));
  CHECK(far.witness_bound_y == doctest::Approx(2.0));

  auto near = eventual_separation(Trajectory::linear(1, 0), Trajectory::affine_log(1, 1, 0), lam, g, 3, 100000);
  CHECK(near.separated == 0);
  CHECK(near.separated_fraction == 0.0);
  CHECK_FALSE(near.first_separated_index.has_value());

  auto origin = eventual_separation(Trajectory::linear(1, 0), Trajectory::constant({0}), lam, g, 1, 1000);
  CHECK(origin.separated_fraction == 1.0);
  CHECK(origin.first_separated_index == std::optional<long long>(1));
}

TEST_CASE("property: distinct cone limits separate eventually") {
  const auto lam = ScaleSequence::linear(1);
  for (const Gauge& g : {Gauge::log(1, 1), Gauge::log(3, 2), Gauge::power(1, 0.5), Gauge::power(2, 0.7)}) {
    for (double slope : {1.5, 2.0, -1.0, 3.0}) {
      auto rep = eventual_separation(Trajectory::linear(1, 0), Trajectory::linear(slope, 0), lam, g, 1, 200000);
      REQUIRE(rep.first_separated_index.has_value());
      CHECK(*rep.first_separated_index < 200000);
      CHECK(rep.min_cone_distance > 0.4);
    }
  }
}

TEST_CASE("annulus_witness on the integer line") {
  auto line = integer_line(0, 10100);
  const Gauge g = Gauge::log(1, 1);
  const Index y = 10000, x = 10009;
  const auto start = std::chrono::steady_clock::now();
  auto rep = annulus_witness(line, x, y, g, g);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("annulus witness took " << secs << " s");
  REQUIRE(rep.status == AnnulusWitness::Status::witness);
  REQUIRE(rep.w.has_value());
  const double dwy = line.distance(*rep.w, y);
  CHECK(dwy > 2 * g(4 * 10000.0));
  CHECK(dwy <= 2 * g(4 * 10000.0) + g(10000.0));
  CHECK(rep.separated_xw);
  CHECK(rep.separated_yw);
  CHECK(rep.chain.front() == *line.origin());
  CHECK(rep.chain.back() == y);
  CHECK(rep.hits.front() == *rep.w);

  auto sep = annulus_witness(line, 10000, 10050, g, g);
  CHECK(sep.status == AnnulusWitness::Status::already_separated);

  CHECK_THROWS_WITH_AS(annulus_witness(line, 5, 6, g, g), "precondition scale too small", PreconditionError);

  std::vector<double> geo = {0};
  for (int k = 0; k <= 20; ++k) geo.push_back(std::ldexp(1.0, k));
  geo.push_back(std::ldexp(1.0, 20) + 3);
  auto sparse = real_line_points(geo, GenerateOptions{true, 100});
  CHECK_THROWS_WITH_AS(annulus_witness(sparse, geo.size() - 1, geo.size() - 2, g, g), "annulus empty on sample",
                       PreconditionError);
}

TEST_CASE("scale_realization examples") {
  auto ints = integer_line(0, 100);
  const Gauge v = Gauge::log(1, 1);
  auto r = scale_realization(ints, 7.5, v, 0.0, true);
  CHECK(ints.label(r.z) == "8");
  CHECK(r.ratio == doctest::Approx(0.9375));
  CHECK(r.bound == doctest::Approx(1 - std::log(9.0) / 8));
  CHECK(r.bound_holds);
  CHECK(r.bound_asserted);
  CHECK(r.warning.empty());

  auto dense = real_line_grid(0, 0.25, 401, GenerateOptions{true, 1000});
  CHECK(scale_realization(dense, 12.5, v, 0.0, true).ratio == 1.0);

  std::vector<double> geo = {0};
  for (int k = 0; k <= 10; ++k) geo.push_back(std::ldexp(1.0, k));
  auto sparse = real_line_points(geo, GenerateOptions{true, 100});
  auto s = scale_realization(sparse, 10, v, 0.0);
  CHECK(sparse.label(s.z) == "16");
  CHECK(s.ratio == doctest::Approx(0.625));
  CHECK_FALSE(s.bound_asserted);
  CHECK_FALSE(s.warning.empty());

  CHECK_THROWS_AS(scale_realization(ints, 1000, v, 0.0), PreconditionError);
}

TEST_CASE("induced_qs_check") {
  auto line = integer_line(-20000, 20000);
  const Gauge g = Gauge::log(1, 1);
  const std::vector<double> scales = {1e2, 1e3, 1e4};

  std::vector<Index> id(line.size());
  std::iota(id.begin(), id.end(), Index{0});
  PointMap iso(line, line, id);
  auto a = induced_qs_check(iso, g, scales, 400, 1);
  for (const auto& sc : a.scales)
    for (const auto& smp : sc.envelope.samples()) CHECK(smp.t == doctest::Approx(smp.s).epsilon(1e-12));
  for (double d : a.drift) CHECK(d <= 1e-12);

  {
    auto coarse = real_line_grid(-20000, 40, 1001, GenerateOptions{true, 2000}).materialized();
    std::vector<Index> cid(coarse.size());
    std::iota(cid.begin(), cid.end(), Index{0});
    PointMap flake(coarse, snowflake(coarse, 0.5), cid);
    auto c = induced_qs_check(flake, g, scales, 300, 2);
    for (const auto& sc : c.scales)
      for (const auto& smp : sc.envelope.samples()) CHECK(smp.t == doctest::Approx(std::sqrt(smp.s)).epsilon(1e-12));
    MESSAGE("snowflake drifts " << c.drift[0] << " " << c.drift[1]);
    for (double d : c.drift) CHECK(d <= 0.05);
  }

  // bounded additive noise of size <= 5
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> noise(-5.0, 5.0);
  std::vector<std::vector<double>> coords;
  for (Index i = 0; i < line.size(); ++i) {
    if (line.is_infinity(i)) coords.emplace_back();
    else coords.push_back({line.coords(i)[0] + (i == *line.origin() ? 0.0 : noise(rng))});
  }
  PointSpace noisy = PointSpace::from_coords(line.labels(), coords);
  noisy.set_origin(line.origin());
  noisy.set_infinity_point(line.infinity_point());
  PointMap f(line, noisy, id);
  auto b = induced_qs_check(f, g, scales, 400, 1);
  REQUIRE(b.drift.size() == 2);
  CHECK(b.drift[1] < b.drift[0]);
  CHECK(b.drift_decreasing);

  CHECK_THROWS_AS(induced_qs_check(iso, Gauge::constant(1e9), {100.0}, 10, 1), PreconditionError);
}

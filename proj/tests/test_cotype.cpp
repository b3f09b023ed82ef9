#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mobius/cotype.hpp"
#include "mobius/error.hpp"
#include "mobius/generate.hpp"

using namespace mobius;

namespace {

std::shared_ptr<const PointSpace> line(const std::vector<double>& xs) {
  return std::make_shared<const PointSpace>(real_line_points(xs));
}

std::shared_ptr<const PointSpace> shared(PointSpace s) { return std::make_shared<const PointSpace>(std::move(s)); }

// Direct evaluation from the definition, tuple by tuple.
std::pair<double, double> oracle_sides(int n, int m, double q, const PointSpace& t, const std::vector<Index>& f) {
  const std::size_t cells = static_cast<std::size_t>(std::pow(m, n));
  auto encode = [&](const std::vector<int>& x) {
    std::size_t idx = 0, pw = 1;
    for (int k = 0; k < n; ++k) {
      idx += static_cast<std::size_t>(((x[k] % m) + m) % m) * pw;
      pw *= static_cast<std::size_t>(m);
    }
    return idx;
  };
  double lhs = 0, rhs = 0;
  std::size_t signs = static_cast<std::size_t>(std::pow(3, n));
  for (std::size_t c = 0; c < cells; ++c) {
    std::vector<int> x(n);
    std::size_t r = c;
    for (int k = 0; k < n; ++k, r /= m) x[k] = static_cast<int>(r % m);
    for (int j = 0; j < n; ++j) {
      auto y = x;
      y[j] += m / 2;
      lhs += std::pow(t.distance(f[encode(y)], f[c]), q);
    }
    for (std::size_t e = 0; e < signs; ++e) {
      auto y = x;
      std::size_t s = e;
      for (int k = 0; k < n; ++k, s /= 3) y[k] += static_cast<int>(s % 3) - 1;
      rhs += std::pow(t.distance(f[encode(y)], f[c]), q);
    }
  }
  return {lhs / cells, std::pow(m, q) * rhs / (cells * signs)};
}

}  // namespace

TEST_CASE("cotype sides on small identity instances") {
  CotypeInstance a{1, 2, 2, line({0, 1}), {0, 1}};
  auto s = cotype_sides(a);
  CHECK(s.exhaustive);
  CHECK(s.lhs == doctest::Approx(1.0));
  CHECK(s.rhs == doctest::Approx(8.0 / 3.0));
  CHECK(s.ratio == doctest::Approx(3.0 / 8.0));

  CotypeInstance b{1, 4, 2, line({0, 1, 2, 3}), {0, 1, 2, 3}};
  s = cotype_sides(b);
  CHECK(s.lhs == doctest::Approx(4.0));
  CHECK(s.rhs == doctest::Approx(32.0));
  CHECK(s.ratio == doctest::Approx(0.125));

  CotypeInstance c{2, 4, 2, line({0, 1, 2}), std::vector<Index>(16, 1)};
  s = cotype_sides(c);
  CHECK(s.lhs == 0.0);
  CHECK(s.rhs == 0.0);
  CHECK(s.ratio == 0.0);
}

TEST_CASE("cotype sides agree with the definition") {
  std::mt19937_64 rng(5);
  auto grid = shared(lp_grid(2, 2, 3));
  for (int n = 1; n <= 3; ++n)
    for (int m : {2, 4, 6}) {
      for (double q : {1.0, 2.0, 3.5}) {
        CotypeInstance inst{n, m, q, grid, {}};
        std::uniform_int_distribution<Index> pick(0, grid->size() - 1);
        inst.f.resize(inst.cells());
        for (auto& v : inst.f) v = pick(rng);
        const auto s = cotype_sides(inst);
        const auto [l, r] = oracle_sides(n, m, q, *grid, inst.f);
        CHECK(s.lhs == doctest::Approx(l).epsilon(1e-12));
        CHECK(s.rhs == doctest::Approx(r).epsilon(1e-12));
      }
    }
}

TEST_CASE("cotype preconditions") {
  CHECK_THROWS_AS(cotype_sides(CotypeInstance{1, 3, 2, line({0, 1, 2}), {0, 1, 2}}), PreconditionError);
  CHECK_THROWS_AS(cotype_sides(CotypeInstance{1, 4, 2, line({0, 1}), {0, 1, 0}}), PreconditionError);
  CHECK_THROWS_AS(cotype_sides(CotypeInstance{1, 2, 2, line({0, 1}), {0, 7}}), std::exception);
}

TEST_CASE("Monte Carlo sides within three standard errors") {
  auto grid = shared(lp_grid(2, 2, 4));
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<Index> pick(0, grid->size() - 1);
  for (int trial = 0; trial < 4; ++trial) {
    CotypeInstance inst{2, 6, 2, grid, {}};
    inst.f.resize(inst.cells());
    for (auto& v : inst.f) v = pick(rng);
    const auto ex = cotype_sides(inst);
    CotypeOptions mc;
    mc.mode = SideMode::monte_carlo;
    mc.mc_samples = 50000;
    mc.seed = 100 + static_cast<std::uint64_t>(trial);
    const auto est = cotype_sides(inst, mc);
    CHECK_FALSE(est.exhaustive);
    CHECK(est.samples == 50000);
    CHECK(est.lhs_stderr > 0);
    CHECK(std::abs(est.lhs - ex.lhs) <= 3 * est.lhs_stderr);
    CHECK(std::abs(est.rhs - ex.rhs) <= 3 * est.rhs_stderr);
  }
  // Forced fallback when the budget is too small.
  CotypeInstance b{1, 4, 2, line({0, 1, 2, 3}), {0, 1, 2, 3}};
  CotypeOptions tiny;
  tiny.enumeration_budget = 4;
  tiny.mc_samples = 200000;
  const auto est = cotype_sides(b, tiny);
  CHECK_FALSE(est.exhaustive);
  CHECK(std::abs(est.lhs - 4.0) <= 3 * est.lhs_stderr);
  CHECK(std::abs(est.rhs - 32.0) <= 3 * est.rhs_stderr);
}

TEST_CASE("cotype sides invariances") {
  std::mt19937_64 rng(3);
  const std::vector<double> xs{0, 0.5, 2, 3.25, 7};
  auto base = line(xs);
  std::vector<double> scaled_xs;
  for (double x : xs) scaled_xs.push_back(3 * x);
  auto scaled = line(scaled_xs);
  // Relabeled isometric copy: reversed order and shifted.
  std::vector<double> rev;
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) rev.push_back(10 - *it);
  auto relabeled = line(rev);

  std::uniform_int_distribution<Index> pick(0, xs.size() - 1);
  for (int trial = 0; trial < 5; ++trial) {
    CotypeInstance inst{2, 4, 2, base, {}};
    inst.f.resize(inst.cells());
    for (auto& v : inst.f) v = pick(rng);
    const auto s = cotype_sides(inst);

    auto t = inst;
    t.target = scaled;
    const auto ss = cotype_sides(t);
    CHECK(ss.lhs == doctest::Approx(9 * s.lhs));
    CHECK(ss.rhs == doctest::Approx(9 * s.rhs));
    CHECK(ss.ratio == doctest::Approx(s.ratio));

    auto r = inst;
    r.target = relabeled;
    for (auto& v : r.f) v = xs.size() - 1 - v;
    const auto rs = cotype_sides(r);
    CHECK(rs.lhs == doctest::Approx(s.lhs));
    CHECK(rs.rhs == doctest::Approx(s.rhs));

    // Translate by a = (1, 3).
    auto tr = inst;
    for (std::size_t x = 0; x < 16; ++x) {
      const std::size_t x1 = x % 4, x2 = x / 4;
      tr.f[x] = inst.f[(x1 + 1) % 4 + 4 * ((x2 + 3) % 4)];
    }
    const auto ts = cotype_sides(tr);
    CHECK(ts.lhs == doctest::Approx(s.lhs));
    CHECK(ts.rhs == doctest::Approx(s.rhs));
  }
}

TEST_CASE("large exponents stay finite") {
  auto t = line({0, 1000, 5000});
  CotypeInstance inst{1, 4, 40, t, {0, 1, 2, 1}};
  const auto s = cotype_sides(inst);
  CHECK(std::isfinite(s.lhs));
  CHECK(std::isfinite(s.rhs));
  CHECK(s.distance_unit == doctest::Approx(5000));
  // Ratio by hand: lhs terms d(f(x+2), f(x)) = 5000 for all x; rhs nonzero terms two per x.
  const double lhs = 1.0;
  const double rhs = std::pow(4.0, 40) * (2 * std::pow(0.2, 40) * 2 + 2 * std::pow(0.8, 40) * 2) / 12.0;
  CHECK(s.ratio == doctest::Approx(lhs / rhs).epsilon(1e-10));
}

TEST_CASE("exhaustive search equals brute force") {
  for (int m : {2, 4}) {
    for (const auto& xs : {std::vector<double>{0, 1, 2}, std::vector<double>{0, 1, 3, 4}}) {
      auto t = line(xs);
      const auto res = cotype_search(1, m, 2, t);
      CHECK(res.method == "exhaustive");
      double best = 0;
      const std::size_t k = xs.size();
      std::size_t total = 1;
      for (int i = 0; i < m; ++i) total *= k;
      for (std::size_t code = 0; code < total; ++code) {
        std::vector<Index> f(m);
        std::size_t r = code;
        for (int i = 0; i < m; ++i, r /= k) f[i] = r % k;
        const auto [l, rr] = oracle_sides(1, m, 2, *t, f);
        best = std::max(best, rr > 0 ? l / rr : 0.0);
      }
      CHECK(res.best_ratio == doctest::Approx(best).epsilon(1e-12));
      CHECK(res.evaluated == total);
      CHECK(res.constant_lower_bound == doctest::Approx(std::sqrt(best)));
    }
  }
  auto grid = shared(lp_grid(2, 2, 2));
  const auto res = cotype_search(2, 2, 2, grid, SearchOptions{100000});
  CHECK(res.method == "exhaustive");
  double best = 0;
  for (std::size_t code = 0; code < 256; ++code) {
    std::vector<Index> f{code % 4, code / 4 % 4, code / 16 % 4, code / 64};
    const auto [l, r] = oracle_sides(2, 2, 2, *grid, f);
    best = std::max(best, r > 0 ? l / r : 0.0);
  }
  CHECK(res.best_ratio == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("local search matches the exhaustive maximum on the path") {
  auto path = line({0, 1, 2});
  const auto ex = cotype_search(1, 4, 2, path);
  REQUIRE(ex.method == "exhaustive");
  SearchOptions opts;
  opts.budget = 10;
  opts.restarts = 20;
  opts.seed = 7;
  const auto ls = cotype_search(1, 4, 2, path, opts);
  CHECK(ls.method == "local_search");
  CHECK(ls.restarts == 20);
  CHECK(ls.best_ratio == doctest::Approx(ex.best_ratio).epsilon(1e-12));
  const auto again = cotype_search(1, 4, 2, path, opts);
  CHECK(again.best_f == ls.best_f);
  CHECK(again.best_restart == ls.best_restart);
  // Reported table reproduces the reported ratio.
  CHECK(cotype_sides(CotypeInstance{1, 4, 2, path, ls.best_f}).ratio == doctest::Approx(ls.best_ratio));
}

TEST_CASE("single point target has ratio zero") {
  auto pt = line({0});
  CHECK(cotype_search(2, 4, 2, pt).best_ratio == 0.0);
  SearchOptions o;
  o.budget = 0;
  o.restarts = 3;
  const auto r = cotype_search(2, 4, 2, pt, o);
  CHECK(r.method == "local_search");
  CHECK(r.best_ratio == 0.0);
  CHECK(r.steps == 0);
}

TEST_CASE("lifting keeps the ratio") {
  auto grid = shared(lp_grid(2, 2, 3));
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<Index> pick(0, 8);
  std::vector<Index> f(16);
  for (auto& v : f) v = pick(rng);
  const double r2 = cotype_sides(CotypeInstance{2, 4, 2, grid, f}).ratio;
  const auto g = lift_table(f, 2, 4);
  CHECK(g.size() == 64);
  CHECK(cotype_sides(CotypeInstance{3, 4, 2, grid, g}).ratio == doctest::Approx(r2));
}

TEST_CASE("cotype growth on l_inf grid versus l_2 grid") {
  auto linf = shared(lp_grid(INFINITY, 3, 3));
  auto l2 = shared(lp_grid(2, 3, 3));
  SearchOptions opts;
  opts.restarts = 8;
  opts.seed = 1;
  double prev = 0;
  std::vector<Index> warm;
  double linf3 = 0;
  for (int n = 1; n <= 3; ++n) {
    SearchOptions o = opts;
    if (!warm.empty()) o.initial = lift_table(warm, n - 1, 4);
    const auto r = cotype_search(n, 4, 2, linf, o);
    CHECK(r.best_ratio >= prev - 1e-12);
    prev = r.best_ratio;
    warm = r.best_f;
    linf3 = r.best_ratio;
  }
  const auto r2 = cotype_search(3, 4, 2, l2, opts);
  CHECK(linf3 > r2.best_ratio);
}

TEST_CASE("enflo sides") {
  auto pm = line({-1, 1});
  auto e = enflo_sides(EnfloInstance{1, 2, pm, {0, 1}});
  CHECK(e.lhs == doctest::Approx(4.0));
  CHECK(e.rhs_sum == doctest::Approx(4.0));
  CHECK(e.ratio == doctest::Approx(1.0));

  CHECK(enflo_sides(EnfloInstance{2, 2, pm, {1, 1, 1, 1}}).ratio == 0.0);

  auto three = line({-2, 0, 2});
  // Bit j set means eps_j = +1: index 0 -> (-1,-1), 3 -> (1,1).
  e = enflo_sides(EnfloInstance{2, 2, three, {0, 1, 1, 2}});
  CHECK(e.lhs == doctest::Approx(8.0));
  CHECK(e.rhs_sum == doctest::Approx(8.0));
  CHECK(e.ratio == doctest::Approx(1.0));

  CHECK_THROWS_AS(enflo_sides(EnfloInstance{2, 2, pm, {0, 1, 1}}), PreconditionError);
}

TEST_CASE("enflo ratio of linear maps into the line is one") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> coef(-5, 5);
  for (int n = 1; n <= 6; ++n)
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<int> a(n);
      do {
        for (auto& v : a) v = coef(rng);
      } while (std::all_of(a.begin(), a.end(), [](int v) { return v == 0; }));
      const std::size_t cube = std::size_t{1} << n;
      std::vector<double> values(cube);
      for (std::size_t e = 0; e < cube; ++e) {
        double s = 0;
        for (int j = 0; j < n; ++j) s += a[j] * ((e >> j & 1) ? 1.0 : -1.0);
        values[e] = s;
      }
      // Target holds each value once.
      std::vector<double> pts = values;
      std::sort(pts.begin(), pts.end());
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      EnfloInstance inst{n, 2, line(pts), {}};
      for (double v : values)
        inst.f.push_back(static_cast<Index>(std::lower_bound(pts.begin(), pts.end(), v) - pts.begin()));
      CHECK(enflo_sides(inst).ratio == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("min m scan") {
  auto rl = line({0, 1, 2, 3, 4});
  SearchOptions opts;
  opts.restarts = 6;
  opts.seed = 2;
  const auto rows = min_m_scan({1, 2, 3}, 2, rl, 1.0, {2, 4, 6}, opts);
  REQUIRE(rows.size() == 3);
  REQUIRE(rows[0].minimal_m);
  CHECK(*rows[0].minimal_m == 2);
  CHECK(rows[0].ratios.front().first == 2);
  std::optional<int> prev;
  for (const auto& r : rows) {
    CHECK(r.floor == doctest::Approx(std::sqrt(static_cast<double>(r.n))));
    if (r.minimal_m) {
      CHECK(r.status == "ok");
      if (prev) CHECK(*r.minimal_m >= *prev);
      prev = r.minimal_m;
    } else {
      CHECK(r.status == "open");
    }
  }
  // A violated candidate below the minimum certifies the ratio exceeds C^q there.
  for (const auto& r : rows)
    for (auto [m, ratio] : r.ratios)
      if (!r.minimal_m || m < *r.minimal_m) CHECK(ratio > 1.0);

  CHECK_THROWS_AS(min_m_scan({1}, 2, rl, 1.0, {}, opts), PreconditionError);
  std::ostringstream csv;
  write_scan_csv(csv, rows);
  CHECK(csv.str().rfind("n,minimal_m,floor,status\n", 0) == 0);
}

TEST_CASE("instance file round trip") {
  auto grid = shared(lp_grid(2, 2, 3));
  CotypeInstance inst{2, 4, 2, grid, {}};
  for (std::size_t x = 0; x < 16; ++x) inst.f.push_back(x % 9);
  std::stringstream ss;
  write_cotype_instance(ss, inst);
  const auto back = read_cotype_instance(ss, grid);
  CHECK(back.n == 2);
  CHECK(back.m == 4);
  CHECK(back.q == 2.0);
  CHECK(back.f == inst.f);

  std::istringstream partial("#n=1\n#m=4\n#q=2\n0,0:0\n1,0:1\n");
  CHECK_THROWS_AS(read_cotype_instance(partial, grid), PreconditionError);
  std::istringstream odd("#n=1\n#m=3\n#q=2\n0,0:0\n1,0:1\n2,0:2\n");
  CHECK_THROWS_AS(read_cotype_instance(odd, grid), PreconditionError);
}

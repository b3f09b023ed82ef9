#include "experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "mobius/am.hpp"
#include "mobius/cone.hpp"
#include "mobius/cotype.hpp"
#include "mobius/gauge.hpp"
#include "mobius/generate.hpp"
#include "mobius/heisenberg.hpp"
#include "mobius/sampling.hpp"
#include "mobius/space_io.hpp"
#include "mobius/transforms.hpp"

namespace mobius::lab {

namespace fs = std::filesystem;

namespace {

Json to_json(const toml::node& node) {
  if (auto t = node.as_table()) {
    Json out = Json::object();
    for (auto&& [k, v] : *t) out[std::string(k.str())] = to_json(v);
    return out;
  }
  if (auto a = node.as_array()) {
    Json out = Json::array();
    for (auto&& v : *a) out.push_back(to_json(v));
    return out;
  }
  if (auto v = node.as_integer()) return v->get();
  if (auto v = node.as_floating_point()) return v->get();
  if (auto v = node.as_boolean()) return v->get();
  if (auto v = node.as_string()) return v->get();
  if (auto v = node.as_date()) {
    std::ostringstream ss;
    ss << *v;
    return ss.str();
  }
  if (auto v = node.as_time()) {
    std::ostringstream ss;
    ss << *v;
    return ss.str();
  }
  if (auto v = node.as_date_time()) {
    std::ostringstream ss;
    ss << *v;
    return ss.str();
  }
  return nullptr;
}

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

/// Typed access to one TOML table; remembers which keys were read so that
/// misspelled keys can be rejected.
class Params {
 public:
  Params(const toml::table* t, std::string where, fs::path base)
      : t_(t), where_(std::move(where)), base_(std::move(base)) {}

  bool has(std::string_view key) const { return t_ && t_->contains(key); }

  double real(std::string_view key, std::optional<double> def = {}) {
    const toml::node* n = get(key, def.has_value());
    if (!n) return *def;
    if (auto v = n->value<double>()) return *v;
    throw ConfigError(name(key) + " must be a number");
  }

  std::int64_t integer(std::string_view key, std::optional<std::int64_t> def = {}) {
    const toml::node* n = get(key, def.has_value());
    if (!n) return *def;
    if (auto v = n->as_integer()) return v->get();
    throw ConfigError(name(key) + " must be an integer");
  }

  std::size_t count(std::string_view key, std::optional<std::size_t> def = {}, std::size_t min = 1) {
    const auto v = integer(key, def ? std::optional<std::int64_t>(static_cast<std::int64_t>(*def)) : std::nullopt);
    if (v < static_cast<std::int64_t>(min)) throw ConfigError(name(key) + " must be >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
  }

  bool flag(std::string_view key, bool def) {
    const toml::node* n = get(key, true);
    if (!n) return def;
    if (auto v = n->as_boolean()) return v->get();
    throw ConfigError(name(key) + " must be a boolean");
  }

  std::string str(std::string_view key, std::optional<std::string> def = {}) {
    const toml::node* n = get(key, def.has_value());
    if (!n) return *def;
    if (auto v = n->as_string()) return v->get();
    throw ConfigError(name(key) + " must be a string");
  }

  std::vector<double> reals(std::string_view key, std::optional<std::vector<double>> def = {}) {
    const toml::node* n = get(key, def.has_value());
    if (!n) return *def;
    std::vector<double> out;
    if (auto a = n->as_array()) {
      for (auto&& e : *a) {
        auto v = e.value<double>();
        if (!v) throw ConfigError(name(key) + " must be an array of numbers");
        out.push_back(*v);
      }
      if (!out.empty()) return out;
    }
    throw ConfigError(name(key) + " must be a nonempty array of numbers");
  }

  std::vector<std::int64_t> integers(std::string_view key, std::optional<std::vector<std::int64_t>> def = {}) {
    const toml::node* n = get(key, def.has_value());
    if (!n) return *def;
    std::vector<std::int64_t> out;
    if (auto a = n->as_array()) {
      for (auto&& e : *a) {
        auto v = e.as_integer();
        if (!v) throw ConfigError(name(key) + " must be an array of integers");
        out.push_back(v->get());
      }
      if (!out.empty()) return out;
    }
    throw ConfigError(name(key) + " must be a nonempty array of integers");
  }

  /// Existing input file, relative paths taken from the config directory.
  fs::path file(std::string_view key) {
    fs::path p(str(key));
    if (p.is_relative()) p = base_ / p;
    if (!fs::exists(p)) throw ConfigError(name(key) + ": file not found: " + p.string());
    return p;
  }

  std::vector<Params> tables(std::string_view key) {
    const toml::node* n = get(key, false);
    std::vector<Params> out;
    auto a = n->as_array();
    if (!a || a->empty()) throw ConfigError(name(key) + " must be a nonempty array of tables");
    for (std::size_t i = 0; i < a->size(); ++i) {
      auto t = (*a)[i].as_table();
      if (!t) throw ConfigError(name(key) + " must be an array of tables");
      out.emplace_back(t, name(key) + "[" + std::to_string(i) + "]", base_);
    }
    return out;
  }

  const fs::path& base() const { return base_; }

  void finish() const {
    if (!t_) return;
    for (auto&& [k, v] : *t_)
      if (!used_.count(std::string(k.str()))) throw ConfigError("unknown key " + name(k.str()));
  }

 private:
  const toml::node* get(std::string_view key, bool optional) {
    used_.insert(std::string(key));
    const toml::node* n = t_ ? t_->get(key) : nullptr;
    if (!n && !optional) throw ConfigError("missing key " + name(key));
    return n;
  }
  std::string name(std::string_view key) const { return where_ + "." + std::string(key); }

  const toml::table* t_;
  std::string where_;
  fs::path base_;
  std::set<std::string> used_;
};

struct Context {
  std::optional<std::uint64_t> config_seed;
  std::optional<std::uint64_t> override_seed;
  bool seed_used = false;

  std::uint64_t seed() {
    seed_used = true;
    if (override_seed) return *override_seed;
    if (config_seed) return *config_seed;
    throw ConfigError("this experiment is randomized and needs an explicit `seed`");
  }
};

struct Check {
  std::string name;
  double value;
  std::string relation;  // "<=", ">=", "==", ">"
  double limit;
  bool passed;
};

Check check_le(std::string name, double value, double limit) {
  return {std::move(name), value, "<=", limit, value <= limit};
}
Check check_ge(std::string name, double value, double limit) {
  return {std::move(name), value, ">=", limit, value >= limit};
}
Check check_true(std::string name, bool ok) { return {std::move(name), ok ? 1.0 : 0.0, "==", 1.0, ok}; }

struct Result {
  Json results = Json::object();
  std::vector<Check> checks;
  std::optional<std::string> csv;
};

using Runner = std::function<Result(Params&, Context&)>;

// ---------------------------------------------------------------- transforms

Result cayley_invariance(Params& p, Context& ctx) {
  const auto spaces = p.count("spaces", 50), points = p.count("points", 20, 4);
  const auto dims = p.count("dims", 2), quads = p.count("quadruples", 1000);
  const double tol = p.real("tolerance", 1e-10);
  p.finish();
  const auto seed = ctx.seed();
  Result r;
  Json per = Json::array();
  double worst = 0;
  std::size_t admissible = 0;
  for (std::size_t i = 0; i < spaces; ++i) {
    auto s = random_euclidean_space(points, static_cast<int>(dims), seed + i);
    const Index pole = i % points;
    const auto rep = moebius_defect(PointMap::by_label(s, cayley_transform(s, pole)), quads, seed + i);
    worst = std::max(worst, rep.defect);
    admissible += rep.admissible;
    per.push_back({{"space", i}, {"pole", s.label(pole)}, {"defect", rep.defect}, {"sampled", rep.sampled},
                   {"admissible", rep.admissible}});
  }
  r.results = {{"max_log_cross_ratio_change", worst}, {"admissible_quadruples", admissible}, {"per_space", per}};
  r.checks.push_back(check_le("max_log_cross_ratio_change", worst, tol));
  return r;
}

Result cayley_roundtrip(Params& p, Context& ctx) {
  const auto spaces = p.count("spaces", 50), points = p.count("points", 20, 4);
  const auto dims = p.count("dims", 2), quads = p.count("quadruples", 1000);
  const double tol = p.real("tolerance", 1e-10);
  p.finish();
  const auto seed = ctx.seed();
  Result r;
  Json per = Json::array();
  double worst = 0;
  for (std::size_t i = 0; i < spaces; ++i) {
    auto s = random_euclidean_space(points, static_cast<int>(dims), seed + i);
    const Index star = s.add_infinity_point("inf");
    const Index q = i % points;
    const auto inv = inverse_cayley_transform(s, q);
    const auto back = cayley_transform(inv, star);
    const auto rep = moebius_defect(PointMap::by_label(s, back), quads, seed + i);
    worst = std::max(worst, rep.defect);
    per.push_back({{"space", i}, {"base", s.label(q)}, {"defect", rep.defect}, {"admissible", rep.admissible}});
  }
  r.results = {{"max_moebius_defect", worst}, {"per_space", per}};
  r.checks.push_back(check_le("max_moebius_defect", worst, tol));
  return r;
}

std::optional<double> positive_cr(const PointSpace& s, const Quadruple& q) {
  const auto cr = cross_ratio(s, q);
  if (!cr || cr->is_zero() || cr->is_inf()) return std::nullopt;
  return cr->value();
}

Result snowflake_power(Params& p, Context& ctx) {
  const auto spaces = p.count("spaces", 1), points = p.count("points", 20, 4);
  const auto dims = p.count("dims", 2), quads = p.count("quadruples", 1000);
  const auto alphas = p.reals("alphas", std::vector<double>{0.25, 0.5, 0.9});
  const double tol = p.real("tolerance", 1e-12);
  p.finish();
  const auto seed = ctx.seed();
  Result r;
  Json per = Json::array();
  double worst = 0;
  for (double a : alphas) {
    double worst_a = 0;
    std::size_t compared = 0;
    for (std::size_t i = 0; i < spaces; ++i) {
      auto s = random_euclidean_space(points, static_cast<int>(dims), seed + i).materialized();
      const auto f = snowflake(s, a);
      for (const auto& q : sample_quadruples(points, quads, seed + i)) {
        const auto before = cross_ratio(s, q), after = cross_ratio(f, q);
        if (!before || !after) {
          if (before.has_value() != after.has_value()) worst_a = INFINITY;
          continue;
        }
        ++compared;
        // 0 and INF are fixed by t -> t^a; both sides must agree exactly there.
        if (before->is_zero() || before->is_inf()) {
          if (*after != *before) worst_a = INFINITY;
          continue;
        }
        const double expect = std::pow(before->value(), a);
        worst_a = std::max(worst_a, std::abs(after->value() - expect) / expect);
      }
    }
    worst = std::max(worst, worst_a);
    per.push_back({{"alpha", a}, {"max_rel_error", worst_a}, {"quadruples", compared}});
  }
  r.results = {{"max_rel_error", worst}, {"per_alpha", per}};
  r.checks.push_back(check_le("max_rel_error", worst, tol));
  return r;
}

Result chain_smoothing(Params& p, Context& ctx) {
  const auto spaces = p.count("spaces", 50), points = p.count("points", 20, 2);
  const auto dims = p.count("dims", 2);
  const double k = p.real("K", 2.0);
  p.finish();
  const auto seed = ctx.seed();
  Result r;
  std::size_t lower = 0, upper = 0, verify_failures = 0, pairs = 0;
  double min_ratio = INFINITY;  // smallest d_hat / (d / K^2)
  for (std::size_t i = 0; i < spaces; ++i) {
    const auto s = random_quasimetric(points, static_cast<int>(dims), k, seed + i);
    const double kk = s.quasimetric_k().value_or(1.0);
    const auto h = chain_smooth(s);
    if (!verify_extended_metric(h).ok) ++verify_failures;
    for (Index x = 0; x < s.size(); ++x)
      for (Index y = x + 1; y < s.size(); ++y) {
        const double d = s.distance(x, y), dh = h.distance(x, y);
        ++pairs;
        if (d / (kk * kk) > dh * (1 + kAxiomTolerance)) ++lower;
        if (dh > d * (1 + kAxiomTolerance)) ++upper;
        min_ratio = std::min(min_ratio, dh * kk * kk / d);
      }
  }
  r.results = {{"pairs", pairs},
               {"lower_violations", lower},
               {"upper_violations", upper},
               {"verify_failures", verify_failures},
               {"min_smoothed_over_lower_bound", num(min_ratio)}};
  r.checks.push_back(check_le("sandwich_violations", static_cast<double>(lower + upper), 0));
  r.checks.push_back(check_le("verify_failures", static_cast<double>(verify_failures), 0));
  return r;
}

// ---------------------------------------------------------------- cones

Result cone_identity(Params& p, Context& ctx) {
  const auto spaces = p.count("spaces", 20), points = p.count("points", 15, 3);
  const auto dims = p.count("dims", 2);
  const auto lambdas = p.reals("lambdas", std::vector<double>{10, 1e3, 1e6});
  const double tol = p.real("tolerance", 1e-12);
  p.finish();
  const auto seed = ctx.seed();
  Result r;
  double worst = 0;
  std::size_t entries = 0;
  Json per = Json::array();
  for (double lam : lambdas) {
    double worst_l = 0;
    for (std::size_t i = 0; i < spaces; ++i) {
      auto s = random_euclidean_space(points, static_cast<int>(dims), seed + i);
      s.add_infinity_point();
      std::vector<Index> sample(s.size());
      std::iota(sample.begin(), sample.end(), Index{0});
      const auto rep = cone_identity_check(s, 0, lam, sample);
      worst_l = std::max(worst_l, rep.max_rel_error);
      entries += rep.entries;
    }
    worst = std::max(worst, worst_l);
    per.push_back({{"lambda", lam}, {"max_rel_error", worst_l}});
  }
  r.results = {{"max_rel_error", worst}, {"entries", entries}, {"per_lambda", per}};
  r.checks.push_back(check_le("max_rel_error", worst, tol));
  return r;
}

Json opt_index(const std::optional<long long>& v) { return v ? Json(*v) : Json(nullptr); }

Result eventual_separation_kind(Params& p, Context&) {
  const auto g = Gauge::parse(p.str("gauge"), p.base());
  const auto lam = ScaleSequence::parse(p.str("lambda"));
  auto cases = p.tables("cases");
  p.finish();
  Result r;
  Json out = Json::array();
  for (auto& c : cases) {
    const auto name = c.str("name");
    const auto x = Trajectory::parse(c.str("x"), c.base());
    const auto y = Trajectory::parse(c.str("y"), c.base());
    const auto first = c.integer("first"), last = c.integer("last");
    std::optional<double> max_first, max_last_unsep, max_frac, min_frac;
    if (c.has("max_first_separated")) max_first = c.real("max_first_separated");
    if (c.has("max_last_unseparated")) max_last_unsep = c.real("max_last_unseparated");
    if (c.has("max_separated_fraction")) max_frac = c.real("max_separated_fraction");
    if (c.has("min_separated_fraction")) min_frac = c.real("min_separated_fraction");
    c.finish();
    const auto rep = eventual_separation(x, y, lam, g, first, last);
    out.push_back({{"name", name},
                   {"x", x.to_string()},
                   {"y", y.to_string()},
                   {"first", first},
                   {"last", last},
                   {"first_separated_index", opt_index(rep.first_separated_index)},
                   {"last_unseparated_index", opt_index(rep.last_unseparated_index)},
                   {"separated_fraction", rep.separated_fraction},
                   {"separated", rep.separated},
                   {"min_cone_distance", num(rep.min_cone_distance)}});
    if (max_first)
      r.checks.push_back(check_le(name + ".first_separated_index",
                                  rep.first_separated_index ? static_cast<double>(*rep.first_separated_index) : INFINITY,
                                  *max_first));
    if (max_last_unsep)
      r.checks.push_back(check_le(name + ".last_unseparated_index",
                                  rep.last_unseparated_index ? static_cast<double>(*rep.last_unseparated_index) : -INFINITY,
                                  *max_last_unsep));
    if (max_frac) r.checks.push_back(check_le(name + ".separated_fraction", rep.separated_fraction, *max_frac));
    if (min_frac) r.checks.push_back(check_ge(name + ".separated_fraction", rep.separated_fraction, *min_frac));
  }
  r.results = {{"gauge", g.to_string()}, {"lambda", lam.to_string()}, {"cases", out}};
  return r;
}

Result annulus(Params& p, Context&) {
  const auto lo = p.integer("line_first", 0), hi = p.integer("line_last");
  const auto xv = p.integer("x"), yv = p.integer("y");
  const auto u = Gauge::parse(p.str("u"), p.base());
  const auto v = Gauge::parse(p.str("v"), p.base());
  p.finish();
  if (hi <= lo) throw ConfigError("params.line_last must exceed params.line_first");
  if (xv < lo || xv > hi || yv < lo || yv > hi) throw ConfigError("params.x and params.y must lie on the line");
  const auto line = real_line_grid(static_cast<double>(lo), 1.0, static_cast<std::size_t>(hi - lo + 1),
                                   GenerateOptions{true, 10'000'000});
  const Index x = static_cast<Index>(xv - lo), y = static_cast<Index>(yv - lo);
  const auto rep = annulus_witness(line, x, y, u, v);
  Result r;
  const bool witness = rep.status == AnnulusWitness::Status::witness;
  r.results = {{"status", witness ? "witness" : "already_separated"},
               {"w", rep.w ? Json(line.label(*rep.w)) : Json(nullptr)},
               {"d_wy", rep.w ? num(line.distance(*rep.w, y)) : Json(nullptr)},
               {"inner", rep.inner},
               {"outer", rep.outer},
               {"chain_length", rep.chain.size()},
               {"hits", rep.hits.size()},
               {"separated_xw", rep.separated_xw},
               {"separated_yw", rep.separated_yw}};
  r.checks.push_back(check_true("witness_found", witness));
  r.checks.push_back(check_true("separated_xw_and_yw", rep.separated_xw && rep.separated_yw));
  return r;
}

Result sbe_am(Params& p, Context& ctx) {
  const auto maps = p.count("maps", 10), points = p.count("points", 200, 3), pairs = p.count("pairs", 10000);
  const double spread = p.real("spread", 100), a0 = p.real("a_first", 0.75), da = p.real("a_step", 0.25);
  const double beta = p.real("beta", 1.5);
  const auto u = Gauge::parse(p.str("gauge", "log:1,1"), p.base());
  p.finish();
  const auto seed = ctx.seed();
  Result r;
  Json per = Json::array();
  std::size_t total_sep = 0, total_viol = 0;
  for (std::size_t i = 0; i < maps; ++i) {
    Rng rng(seed + i);
    std::normal_distribution<double> gauss(0.0, spread);
    std::vector<std::vector<double>> pts = {{0, 0}};
    for (std::size_t k = 1; k < points; ++k) pts.push_back({gauss(rng), gauss(rng)});
    const auto src = coords_space(pts, 2.0, 0);
    const double a = a0 + da * static_cast<double>(i);
    const auto sbe = synthetic_sbe_map(src, a, beta, u, seed + i);
    const auto am = sbe_to_am(sbe.constants);
    std::uniform_int_distribution<Index> pick(0, points - 1);
    std::size_t separated = 0, violations = 0;
    double worst = 0;  // max over separated pairs of max(e/d, d/e) / D
    for (std::size_t k = 0; k < pairs; ++k) {
      const Index x = pick(rng);
      Index y = pick(rng);
      while (y == x) y = pick(rng);
      if (!is_separated(src, am.v, x, y)) continue;
      ++separated;
      const double d = src.distance(x, y);
      const double e = sbe.map.target().distance(sbe.map(x), sbe.map(y));
      const double stretch = std::max(e / d, d / e) / am.D;
      worst = std::max(worst, stretch);
      if (stretch > 1 + 1e-12) ++violations;
    }
    total_sep += separated;
    total_viol += violations;
    const auto& k = sbe.constants;
    per.push_back({{"map", i},
                   {"constants", {{"c", k.c}, {"C", k.C}, {"c_prime", k.c_prime}, {"C_prime", k.C_prime}}},
                   {"v", am.v.to_string()},
                   {"D", am.D},
                   {"separated_pairs", separated},
                   {"violations", violations},
                   {"max_stretch_over_D", worst}});
  }
  r.results = {{"gauge_u", u.to_string()}, {"sampled_pairs", maps * pairs}, {"separated_pairs", total_sep},
               {"violations", total_viol}, {"per_map", per}};
  r.checks.push_back(check_le("violations", static_cast<double>(total_viol), 0));
  r.checks.push_back(check_ge("separated_pairs", static_cast<double>(total_sep), 1));
  return r;
}

// ---------------------------------------------------------------- Heisenberg

Result heis_psd(Params& p, Context& ctx) {
  const auto ks = p.integers("sizes", std::vector<std::int64_t>{8, 32, 64});
  const auto lambdas = p.reals("lambdas", std::vector<double>{-2, -1, -0.5, 0.5, 1, 2});
  const auto dims = p.integers("dims", std::vector<std::int64_t>{1, 4});
  const double rel = p.real("tolerance_per_point", 1e-8);
  p.finish();
  const auto seed = ctx.seed();
  Result r;
  Json cells = Json::array();
  bool left_all = true, right_all = true;
  for (auto dim : dims)
    for (auto k : ks) {
      if (dim < 1 || k < 1) throw ConfigError("params.dims and params.sizes must be positive");
      const auto pts = random_heis_points(static_cast<std::size_t>(dim), static_cast<std::size_t>(k),
                                          seed + 1000 * static_cast<std::uint64_t>(dim) + static_cast<std::uint64_t>(k));
      for (double lam : lambdas) {
        const double floor = -rel * static_cast<double>(k);
        const double ml = psd_test(phi_lambda_gram(pts, lam, GramOrdering::left)).min_eigenvalue;
        const double mr = psd_test(phi_lambda_gram(pts, lam, GramOrdering::right)).min_eigenvalue;
        left_all = left_all && ml >= floor;
        right_all = right_all && mr >= floor;
        cells.push_back({{"dim", dim}, {"k", k}, {"lambda", lam}, {"min_eigenvalue_left", ml},
                         {"min_eigenvalue_right", mr}, {"floor", floor}});
      }
    }
  Json passing = Json::array();
  if (left_all) passing.push_back("left");
  if (right_all) passing.push_back("right");
  r.results = {{"orderings_passing_every_cell", passing}, {"cells", cells}};
  r.checks.push_back(check_true("one_ordering_passes_every_cell", left_all || right_all));
  return r;
}

Result cnd_heisenberg(Params& p, Context& ctx) {
  const auto points = p.count("points", 40, 3);
  const auto dims = p.integers("dims", std::vector<std::int64_t>{1, 2, 3, 4});
  const auto quads = p.count("envelope_quadruples", 1000);
  const double rel = p.real("cnd_tolerance", 1e-8);
  const double rec_tol = p.real("reconstruction_tolerance", 1e-8);
  const double env_tol = p.real("envelope_tolerance", 1e-10);
  p.finish();
  const auto seed = ctx.seed();
  Result r;
  Json per = Json::array();
  for (auto dim : dims) {
    if (dim < 1) throw ConfigError("params.dims must be positive");
    const auto s = seed + static_cast<std::uint64_t>(dim);
    const auto pts = random_heis_points(static_cast<std::size_t>(dim), points, s);
    const auto k = heis_distance_kernel(pts);
    const auto cnd = check_cnd(k, rel);
    const auto emb = gns_embed(k, 0, rel);

    auto base = heis_space(pts);
    const auto labels = base.labels();
    base.set_origin(0);
    base.add_infinity_point();
    const auto coords = emb.as_space(labels);
    std::vector<std::vector<double>> rows;
    for (Index i = 0; i < coords.size(); ++i) rows.push_back(coords.coords(i));
    auto target = PointSpace::from_coords(labels, rows);
    target.add_infinity_point();
    std::vector<Index> id(base.size());
    std::iota(id.begin(), id.end(), Index{0});
    const auto env = am_envelope(PointMap(base, target, id), Gauge::constant(0), quads, s);
    const double dev = env.max_power_deviation(0.5);

    Json spectrum = Json::array();
    for (double v : cnd.centered_spectrum) spectrum.push_back(v);
    const std::string tag = "dim" + std::to_string(dim);
    per.push_back({{"dim", dim},
                   {"is_cnd", cnd.is_cnd},
                   {"max_centered_eigenvalue", cnd.max_centered_eigenvalue},
                   {"spectral_radius", cnd.spectral_radius},
                   {"centered_spectrum", spectrum},
                   {"gns_reconstruction_error", emb.reconstruction_error},
                   {"gns_clipped_eigenvalue", emb.clipped_eigenvalue},
                   {"envelope_quadruples", env.samples().size()},
                   {"envelope_sqrt_deviation", dev}});
    r.checks.push_back(check_le(tag + ".max_centered_eigenvalue", cnd.max_centered_eigenvalue, rel * cnd.spectral_radius));
    r.checks.push_back(check_le(tag + ".gns_reconstruction_error", emb.reconstruction_error, rec_tol));
    r.checks.push_back(check_le(tag + ".envelope_sqrt_deviation", dev, env_tol));
  }
  r.results = {{"points", points}, {"per_dim", per}};
  return r;
}

Result integral_grid(Params& p, Context&) {
  const auto rs = p.reals("r", std::vector<double>{0.5, 1, 2});
  const auto ts = p.reals("t", std::vector<double>{0, 1, 5});
  const auto budget = p.count("budget", 20000);
  const double tol = p.real("tolerance", 1e-6);
  p.finish();
  Result r;
  Json rows = Json::array();
  std::ostringstream csv;
  csv << "r,t,lhs,rhs,rel_error\n";
  double worst = 0;
  for (double rr : rs)
    for (double t : ts) {
      const auto rep = integral_identity(rr, t, budget);
      worst = std::max(worst, rep.rel_error);
      rows.push_back({{"r", rr}, {"t", t}, {"lhs", rep.lhs}, {"rhs", rep.rhs}, {"rel_error", rep.rel_error},
                      {"error_estimate", rep.error_estimate}});
      csv << format_double(rr) << "," << format_double(t) << "," << format_double(rep.lhs) << ","
          << format_double(rep.rhs) << "," << format_double(rep.rel_error) << "\n";
    }
  const auto spot = integral_identity(1, 0, budget);
  const double closed = std::numbers::pi * std::sqrt(2.0);
  const double spot_err = std::abs(spot.lhs / closed - 1);
  r.results = {{"max_rel_error", worst}, {"grid", rows},
               {"spot", {{"r", 1}, {"t", 0}, {"lhs", spot.lhs}, {"closed_form", closed}, {"rel_error", spot_err}}}};
  r.checks.push_back(check_le("max_rel_error", worst, tol));
  r.checks.push_back(check_le("spot_rel_error", spot_err, 1e-6));
  r.csv = csv.str();
  return r;
}

Result cnd_limit(Params& p, Context&) {
  const double a = p.real("a_norm", 1), t = p.real("t", 0);
  const auto eps = p.reals("eps", std::vector<double>{0.1, 0.05, 0.01});
  const auto budget = p.count("budget", 20000);
  const double tol = p.real("tolerance", 0.02);
  p.finish();
  const auto rep = cnd_limit_check(a, t, eps, budget);
  Result r;
  Json series = Json::array();
  for (std::size_t i = 0; i < rep.eps.size(); ++i)
    series.push_back({{"eps", rep.eps[i]}, {"value", rep.values[i]}, {"rel_gap", std::abs(rep.values[i] / rep.target - 1)}});
  r.results = {{"a_norm", a},         {"t", t},
               {"target", rep.target}, {"series", series},
               {"monotone", rep.monotone}, {"final_rel_gap", rep.final_rel_gap},
               {"linear_extrapolation", rep.limit_estimate},
               {"extrapolation_rel_gap", std::abs(rep.limit_estimate / rep.target - 1)}};
  r.checks.push_back(check_true("monotone_toward_target", rep.monotone));
  r.checks.push_back(check_le("final_rel_gap", rep.final_rel_gap, tol));
  return r;
}

// ---------------------------------------------------------------- cotype

std::shared_ptr<const PointSpace> line_target(const std::vector<double>& xs) {
  return std::make_shared<const PointSpace>(real_line_points(xs));
}

Json sides_json(const CotypeSides& s) {
  Json j = {{"lhs", s.lhs}, {"rhs", s.rhs}, {"ratio", s.ratio}, {"exhaustive", s.exhaustive}};
  if (!s.exhaustive) {
    j["samples"] = s.samples;
    j["lhs_stderr"] = s.lhs_stderr;
    j["rhs_stderr"] = s.rhs_stderr;
  }
  if (s.distance_unit != 1) j["distance_unit"] = s.distance_unit;
  return j;
}

Json table_json(const std::vector<Index>& f) {
  Json j = Json::array();
  for (Index v : f) j.push_back(v);
  return j;
}

Result cotype_exact(Params& p, Context& ctx) {
  const auto samples = p.count("mc_samples", 200000, 2);
  auto insts = p.tables("instances");
  p.finish();
  const auto seed = ctx.seed();
  Result r;
  Json out = Json::array();
  for (std::size_t i = 0; i < insts.size(); ++i) {
    auto& c = insts[i];
    CotypeInstance inst;
    inst.n = static_cast<int>(c.integer("n"));
    inst.m = static_cast<int>(c.integer("m"));
    inst.q = c.real("q");
    inst.target = line_target(c.reals("points"));
    if (c.has("f")) {
      for (auto v : c.integers("f")) {
        if (v < 0) throw ConfigError("instances.f entries must be point indices");
        inst.f.push_back(static_cast<Index>(v));
      }
    } else {
      if (inst.m < 2 || inst.n < 1) throw PreconditionError("cotype: bad n or m");
      std::size_t cells = 1;
      for (int k = 0; k < inst.n; ++k) cells *= static_cast<std::size_t>(inst.m);
      for (std::size_t x = 0; x < cells; ++x) inst.f.push_back(x % inst.target->size());
    }
    std::optional<double> el, er;
    if (c.has("expect_lhs")) el = c.real("expect_lhs");
    if (c.has("expect_rhs")) er = c.real("expect_rhs");
    c.finish();
    CotypeOptions ex;
    ex.mode = SideMode::exhaustive;
    const auto exact = cotype_sides(inst, ex);
    CotypeOptions mc;
    mc.mode = SideMode::monte_carlo;
    mc.mc_samples = samples;
    mc.seed = seed + i;
    const auto est = cotype_sides(inst, mc);
    const std::string tag = "instance" + std::to_string(i);
    if (el) r.checks.push_back(check_le(tag + ".lhs_error", std::abs(exact.lhs - *el), 1e-12 * std::max(1.0, std::abs(*el))));
    if (er) r.checks.push_back(check_le(tag + ".rhs_error", std::abs(exact.rhs - *er), 1e-12 * std::max(1.0, std::abs(*er))));
    const double zl = est.lhs_stderr > 0 ? std::abs(est.lhs - exact.lhs) / est.lhs_stderr : (est.lhs == exact.lhs ? 0 : INFINITY);
    const double zr = est.rhs_stderr > 0 ? std::abs(est.rhs - exact.rhs) / est.rhs_stderr : (est.rhs == exact.rhs ? 0 : INFINITY);
    r.checks.push_back(check_le(tag + ".mc_lhs_z", zl, 3));
    r.checks.push_back(check_le(tag + ".mc_rhs_z", zr, 3));
    out.push_back({{"n", inst.n}, {"m", inst.m}, {"q", inst.q}, {"f", table_json(inst.f)}, {"exhaustive", sides_json(exact)},
                   {"monte_carlo", sides_json(est)}, {"mc_seed", mc.seed}, {"mc_lhs_z", num(zl)}, {"mc_rhs_z", num(zr)}});
  }
  r.results = {{"instances", out}};
  return r;
}

Json search_json(const CotypeSearchResult& s) {
  return {{"method", s.method},         {"best_ratio", s.best_ratio}, {"constant_lower_bound", s.constant_lower_bound},
          {"evaluated", s.evaluated},   {"restarts", s.restarts},     {"steps", s.steps},
          {"best_restart", s.best_restart}, {"best_f", table_json(s.best_f)}};
}

Result cotype_search_oracle(Params& p, Context& ctx) {
  const int n = static_cast<int>(p.integer("n", 1)), m = static_cast<int>(p.integer("m", 4));
  const double q = p.real("q", 2);
  const auto target = line_target(p.reals("points", std::vector<double>{0, 1, 2}));
  const auto restarts = p.count("restarts", 20);
  const auto budget = p.count("exhaustive_budget", 100000);
  p.finish();
  SearchOptions ex;
  ex.budget = budget;
  const auto exact = cotype_search(n, m, q, target, ex);
  if (exact.method != "exhaustive") throw ConfigError("instance too large for the exhaustive oracle");
  SearchOptions ls;
  ls.budget = 0;
  ls.restarts = restarts;
  ls.seed = ctx.seed();
  const auto local = cotype_search(n, m, q, target, ls);
  Result r;
  const double gap = std::abs(local.best_ratio - exact.best_ratio) / std::max(exact.best_ratio, 1e-300);
  r.results = {{"exhaustive", search_json(exact)}, {"local_search", search_json(local)}, {"rel_gap", gap}};
  r.checks.push_back(check_le("local_vs_exhaustive_rel_gap", gap, 1e-12));
  return r;
}

Result cotype_growth(Params& p, Context& ctx) {
  const int m = static_cast<int>(p.integer("m", 4));
  const double q = p.real("q", 2);
  const auto ns = p.integers("n", std::vector<std::int64_t>{1, 2, 3});
  const int gdims = static_cast<int>(p.integer("grid_dims", 3)), side = static_cast<int>(p.integer("grid_side", 3));
  const auto restarts = p.count("restarts", 20);
  const bool warm = p.flag("warm_start", true);
  p.finish();
  const auto seed = ctx.seed();
  Result r;
  std::map<std::string, std::vector<double>> ratios;
  Json runs = Json::object();
  for (const auto& [name, pexp] : std::vector<std::pair<std::string, double>>{{"linf", INFINITY}, {"l2", 2.0}}) {
    const auto target = std::make_shared<const PointSpace>(lp_grid(pexp, gdims, side));
    std::optional<std::vector<Index>> prev;
    std::int64_t prev_n = 0;
    Json rows = Json::array();
    for (auto n : ns) {
      SearchOptions o;
      o.restarts = restarts;
      o.seed = seed + static_cast<std::uint64_t>(n);
      if (warm && prev && n == prev_n + 1) o.initial = lift_table(*prev, static_cast<int>(prev_n), m);
      const auto res = cotype_search(static_cast<int>(n), m, q, target, o);
      ratios[name].push_back(res.best_ratio);
      rows.push_back({{"n", n}, {"seed", o.seed}, {"warm_started", o.initial.has_value()}, {"search", search_json(res)}});
      prev = res.best_f;
      prev_n = n;
    }
    runs[name] = rows;
  }
  const auto& li = ratios["linf"];
  bool nondecreasing = true;
  for (std::size_t i = 1; i < li.size(); ++i) nondecreasing = nondecreasing && li[i] >= li[i - 1];
  r.results = {{"m", m}, {"q", q}, {"grid_dims", gdims}, {"grid_side", side}, {"runs", runs}};
  r.checks.push_back(check_true("linf_nondecreasing_in_n", nondecreasing));
  r.checks.push_back({"linf_exceeds_l2_at_max_n", li.back() - ratios["l2"].back(), ">", 0.0,
                      li.back() > ratios["l2"].back()});
  return r;
}

Result min_m(Params& p, Context& ctx) {
  const auto target = line_target(p.reals("points"));
  const auto ns = p.integers("n");
  const double q = p.real("q", 2), c = p.real("C", 1);
  const auto ms = p.integers("m_candidates");
  const auto restarts = p.count("restarts", 20);
  p.finish();
  SearchOptions o;
  o.restarts = restarts;
  o.seed = ctx.seed();
  std::vector<int> nv(ns.begin(), ns.end()), mv(ms.begin(), ms.end());
  const auto rows = min_m_scan(nv, q, target, c, mv, o);
  Result r;
  Json out = Json::array();
  for (const auto& row : rows) {
    Json rs = Json::array();
    for (auto [mm, ratio] : row.ratios) rs.push_back({{"m", mm}, {"ratio", ratio}});
    out.push_back({{"n", row.n}, {"minimal_m", row.minimal_m ? Json(*row.minimal_m) : Json(nullptr)},
                   {"floor", row.floor}, {"status", row.status}, {"ratios", rs}});
  }
  std::ostringstream csv;
  write_scan_csv(csv, rows);
  r.results = {{"rows", out}};
  r.csv = csv.str();
  return r;
}

Result cotype_instance_kind(Params& p, Context& ctx) {
  const auto space_path = p.file("space");
  const auto inst_path = p.file("instance");
  const auto mode = p.str("mode", "auto");
  const auto samples = p.count("mc_samples", 200000, 2);
  p.finish();
  auto target = std::make_shared<const PointSpace>(read_space_csv(space_path));
  std::ifstream in(inst_path);
  const auto inst = read_cotype_instance(in, target);
  CotypeOptions o;
  if (mode == "exhaustive") o.mode = SideMode::exhaustive;
  else if (mode == "monte_carlo") o.mode = SideMode::monte_carlo;
  else if (mode != "auto") throw ConfigError("params.mode must be auto, exhaustive or monte_carlo");
  o.mc_samples = samples;
  const std::uint64_t terms = [&] {
    std::uint64_t t = 1;
    for (int k = 0; k < inst.n; ++k) t *= static_cast<std::uint64_t>(inst.m) * 3;
    return t;
  }();
  if (o.mode == SideMode::monte_carlo || (o.mode == SideMode::automatic && terms > o.enumeration_budget))
    o.seed = ctx.seed();
  const auto s = cotype_sides(inst, o);
  Result r;
  r.results = {{"n", inst.n}, {"m", inst.m}, {"q", inst.q}, {"target_points", target->size()}, {"sides", sides_json(s)}};
  return r;
}

const std::map<std::string, Runner>& registry() {
  static const std::map<std::string, Runner> kinds = {
      {"annulus_witness", annulus},
      {"cayley_invariance", cayley_invariance},
      {"cayley_roundtrip", cayley_roundtrip},
      {"chain_smoothing", chain_smoothing},
      {"cnd_heisenberg", cnd_heisenberg},
      {"cnd_limit", cnd_limit},
      {"cone_identity", cone_identity},
      {"cotype_exact", cotype_exact},
      {"cotype_growth", cotype_growth},
      {"cotype_instance", cotype_instance_kind},
      {"cotype_search_oracle", cotype_search_oracle},
      {"eventual_separation", eventual_separation_kind},
      {"heis_psd", heis_psd},
      {"integral_grid", integral_grid},
      {"min_m_scan", min_m},
      {"sbe_am", sbe_am},
      {"snowflake_power", snowflake_power},
  };
  return kinds;
}

}  // namespace

std::vector<std::string> experiment_kinds() {
  std::vector<std::string> out;
  for (const auto& [k, v] : registry()) out.push_back(k);
  return out;
}

Experiment load_experiment(const fs::path& path, std::optional<std::uint64_t> seed_override) {
  if (!fs::exists(path)) throw ConfigError("config not found: " + path.string());
  Experiment e;
  try {
    e.config = toml::parse_file(path.string());
  } catch (const toml::parse_error& err) {
    std::ostringstream ss;
    ss << "config " << path.string() << ": " << err.description() << " (line " << err.source().begin.line << ")";
    throw ConfigError(ss.str());
  }
  e.config_path = path;
  e.seed_override = seed_override;
  return e;
}

Outcome run_experiment(const Experiment& exp) {
  const auto& cfg = exp.config;
  static const std::set<std::string> top = {"kind", "description", "seed", "params", "output"};
  for (auto&& [k, v] : cfg)
    if (!top.count(std::string(k.str()))) throw ConfigError("unknown top-level key '" + std::string(k.str()) + "'");
  const auto kind = cfg["kind"].value<std::string>();
  if (!kind) throw ConfigError("config needs a string `kind`");
  const auto it = registry().find(*kind);
  if (it == registry().end()) throw ConfigError("unknown experiment kind '" + *kind + "'");

  Context ctx;
  ctx.override_seed = exp.seed_override;
  if (auto s = cfg.get("seed")) {
    auto v = s->as_integer();
    if (!v || v->get() < 0) throw ConfigError("`seed` must be a nonnegative integer");
    ctx.config_seed = static_cast<std::uint64_t>(v->get());
  }
  const auto* params = cfg.get("params");
  if (params && !params->is_table()) throw ConfigError("`params` must be a table");
  const fs::path base = exp.config_path.parent_path();
  Params p(params ? params->as_table() : nullptr, "params", base);

  const auto* output = cfg.get("output");
  if (output && !output->is_table()) throw ConfigError("`output` must be a table");
  Params outp(output ? output->as_table() : nullptr, "output", base);
  const auto stem = exp.config_path.stem().string();
  fs::path report_path = outp.str("report", stem + ".report.json");
  std::optional<fs::path> csv_path;
  if (outp.has("csv")) csv_path = outp.str("csv");
  outp.finish();

  Result res = it->second(p, ctx);
  if (res.csv && !csv_path) csv_path = stem + ".csv";

  Outcome out;
  Json checks = Json::array();
  for (const auto& c : res.checks) {
    checks.push_back({{"name", c.name}, {"value", num(c.value)}, {"relation", c.relation}, {"limit", num(c.limit)},
                      {"passed", c.passed}});
    out.passed = out.passed && c.passed;
  }
  Json seeds = Json::object();
  if (ctx.seed_used) {
    seeds["seed"] = ctx.seed();
    seeds["source"] = exp.seed_override ? "override" : "config";
  }
  out.report = {{"tool", "mobius-lab"},
                {"version", MOBIUS_LAB_VERSION},
                {"kind", *kind},
                {"config", to_json(cfg)},
                {"seeds", seeds},
                {"results", res.results},
                {"checks", checks},
                {"passed", out.passed}};
  if (csv_path) {
    out.report["outputs"] = {{"csv", csv_path->string()}};
    out.files.push_back({*csv_path, *res.csv});
  }
  out.report_path = report_path;
  return out;
}

std::string render_report(const Json& report, const std::string& timestamp) {
  Json j = report;
  j["timestamp"] = timestamp;
  return j.dump(2) + "\n";
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

/// max |log CR_b - exponent log CR_a| over sampled quadruples (matched by label).
std::pair<double, std::size_t> cr_log_deviation(const PointSpace& a, const PointSpace& b, double exponent,
                                                std::size_t budget, std::uint64_t seed) {
  const PointMap map = PointMap::by_label(a, b);
  double worst = 0;
  std::size_t used = 0;
  for (const auto& q : sample_quadruples(a.size(), budget, seed)) {
    const auto before = positive_cr(a, q);
    const auto after = positive_cr(b, Quadruple{map(q.x), map(q.y), map(q.z), map(q.w)});
    if (!before || !after) continue;
    worst = std::max(worst, std::abs(std::log(*after) - exponent * std::log(*before)));
    ++used;
  }
  return {worst, used};
}

}  // namespace

ConvertResult convert_space(const PointSpace& input, const std::string& chain, std::size_t spot_quadruples,
                            std::uint64_t seed) {
  std::vector<std::string> steps;
  {
    std::stringstream ss(chain);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok.erase(0, tok.find_first_not_of(" \t"));
      tok.erase(tok.find_last_not_of(" \t") + 1);
      if (!tok.empty()) steps.push_back(tok);
    }
  }
  if (steps.empty()) throw ConfigError("empty transform chain");

  PointSpace current = input;
  Json log = Json::array();
  double exponent = 1.0;
  bool moebius_chain = true;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::string& s = steps[i];
    PointSpace next;
    Json entry = {{"index", i}, {"step", s}};
    double step_exponent = 1.0;
    bool spot = true;
    try {
      if (s.rfind("cayley@", 0) == 0) {
        const auto id = s.substr(7);
        next = cayley_transform(current, current.index_of(id));
        entry["op"] = "cayley";
        entry["point"] = id;
      } else if (s.rfind("inverse_cayley@", 0) == 0) {
        const auto id = s.substr(15);
        next = inverse_cayley_transform(current, current.index_of(id));
        entry["op"] = "inverse_cayley";
        entry["point"] = id;
      } else if (s.rfind("snowflake:", 0) == 0) {
        step_exponent = parse_double(s.substr(10));
        next = snowflake(current, step_exponent);
        entry["op"] = "snowflake";
        entry["alpha"] = step_exponent;
      } else if (s == "chain_smooth") {
        next = chain_smooth(current);
        entry["op"] = "chain_smooth";
        spot = false;
        moebius_chain = false;
      } else {
        throw ParseError("unknown step '" + s + "'");
      }
      if (spot) {
        const auto [dev, used] = cr_log_deviation(current, next, step_exponent, spot_quadruples, seed + i);
        entry["cross_ratio_check"] = {{"exponent", step_exponent}, {"max_log_deviation", dev}, {"quadruples", used}};
      }
    } catch (const Error& e) {
      throw ConfigError("step " + std::to_string(i) + " (" + s + "): " + e.what());
    }
    exponent *= step_exponent;
    entry["points"] = next.size();
    entry["infinity_point"] = next.infinity_point() ? Json(next.label(*next.infinity_point())) : Json(nullptr);
    entry["K_status"] = to_string(next.k_status());
    if (auto k = next.quasimetric_k()) entry["K"] = *k;
    log.push_back(entry);
    current = std::move(next);
  }
  Json prov = {{"tool", "mobius-lab"}, {"version", MOBIUS_LAB_VERSION}, {"chain", chain}, {"seed", seed},
               {"steps", log}};
  if (moebius_chain) {
    const auto [dev, used] = cr_log_deviation(input, current, exponent, spot_quadruples, seed);
    prov["end_to_end"] = {{"exponent", exponent}, {"max_log_deviation", dev}, {"quadruples", used}};
    if (exponent == 1.0 && used > 0) {
      const auto rep = moebius_defect(PointMap::by_label(input, current), spot_quadruples, seed);
      prov["end_to_end"]["moebius_defect"] = rep.defect;
    }
  }
  return {std::move(current), std::move(prov)};
}

}  // namespace mobius::lab

#include "mobius/cone.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "mobius/error.hpp"
#include "mobius/parallel.hpp"
#include "mobius/sampling.hpp"
#include "mobius/space_io.hpp"

namespace mobius {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// "name(a,b,c)" -> {name, [a,b,c]}
std::pair<std::string, std::vector<double>> parse_call(std::string_view s) {
  const auto open = s.find('(');
  if (open == std::string_view::npos || s.back() != ')') throw ParseError("expected name(args) in '" + std::string(s) + "'");
  std::pair<std::string, std::vector<double>> out{std::string(s.substr(0, open)), {}};
  std::stringstream ss(std::string(s.substr(open + 1, s.size() - open - 2)));
  std::string tok;
  while (std::getline(ss, tok, ',')) out.second.push_back(parse_double(tok));
  return out;
}

void expect_args(const std::pair<std::string, std::vector<double>>& call, std::size_t n) {
  if (call.second.size() != n)
    throw ParseError(call.first + " expects " + std::to_string(n) + " parameter(s), got " + std::to_string(call.second.size()));
}

double lp_norm_diff(const std::vector<double>& a, const std::vector<double>& b, double p) {
  if (a.size() != b.size()) throw PreconditionError("trajectory dimension mismatch");
  double acc = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = std::abs(a[k] - b[k]);
    if (std::isinf(p)) acc = std::max(acc, d);
    else acc += std::pow(d, p);
  }
  return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
}

double rel_err(double got, double expected) {
  return std::abs(got - expected) / std::max(1.0, std::abs(expected));
}

}  // namespace

// ---------------------------------------------------------------- trajectories

Trajectory Trajectory::linear(double a, double b) {
  Trajectory t;
  t.kind_ = Kind::linear;
  t.a_ = a;
  t.b_ = b;
  return t;
}

Trajectory Trajectory::affine_log(double a, double b, double c) {
  Trajectory t;
  t.kind_ = Kind::affine_log;
  t.a_ = a;
  t.b_ = b;
  t.c_ = c;
  return t;
}

Trajectory Trajectory::constant(std::vector<double> point) {
  if (point.empty()) throw PreconditionError("constant trajectory needs a point");
  Trajectory t;
  t.kind_ = Kind::constant;
  t.point_ = std::move(point);
  return t;
}

Trajectory Trajectory::table(std::vector<long long> n, std::vector<std::vector<double>> coords) {
  if (n.empty() || n.size() != coords.size()) throw PreconditionError("trajectory table needs matching nonempty columns");
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] < 1 || (i > 0 && n[i] <= n[i - 1])) throw PreconditionError("trajectory indices must be positive and strictly increasing");
    if (coords[i].size() != coords[0].size() || coords[i].empty())
      throw PreconditionError("trajectory rows must share a nonzero dimension");
  }
  Trajectory t;
  t.kind_ = Kind::table;
  t.n_ = std::move(n);
  t.rows_ = std::move(coords);
  return t;
}

Trajectory Trajectory::parse(std::string_view spec, const std::filesystem::path& base_dir) {
  if (spec.starts_with("gen:")) {
    auto call = parse_call(spec.substr(4));
    if (call.first == "linear") {
      expect_args(call, 2);
      return linear(call.second[0], call.second[1]);
    }
    if (call.first == "affine_log") {
      expect_args(call, 3);
      return affine_log(call.second[0], call.second[1], call.second[2]);
    }
    if (call.first == "constant") return constant(call.second);
    throw ParseError("unknown trajectory generator '" + call.first + "'");
  }
  std::filesystem::path path(spec);
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trajectory file " + path.string());
  std::vector<long long> ns;
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> cells;
    try {
      while (std::getline(ss, tok, ',')) cells.push_back(parse_double(tok));
    } catch (const ParseError&) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw;
    }
    first = false;
    if (cells.size() < 2) throw ParseError("trajectory row needs an index and coordinates: " + line);
    ns.push_back(static_cast<long long>(cells[0]));
    rows.emplace_back(cells.begin() + 1, cells.end());
  }
  return table(std::move(ns), std::move(rows));
}

std::size_t Trajectory::dim() const {
  switch (kind_) {
    case Kind::constant: return point_.size();
    case Kind::table: return rows_.front().size();
    default: return 1;
  }
}

std::vector<double> Trajectory::at(long long n) const {
  const double x = static_cast<double>(n);
  switch (kind_) {
    case Kind::linear: return {a_ * x + b_};
    case Kind::affine_log:
      if (n < 1) throw PreconditionError("affine_log trajectory is defined for n >= 1");
      return {a_ * x + b_ * std::log(x) + c_};
    case Kind::constant: return point_;
    case Kind::table: {
      auto it = std::lower_bound(n_.begin(), n_.end(), n);
      if (it == n_.end() || *it != n) throw PreconditionError("trajectory has no entry at index " + std::to_string(n));
      return rows_[static_cast<std::size_t>(it - n_.begin())];
    }
  }
  return {};
}

bool Trajectory::records(long long n) const {
  if (kind_ != Kind::table) return n >= 1;
  return std::binary_search(n_.begin(), n_.end(), n);
}

std::vector<long long> Trajectory::indices(long long first, long long last) const {
  std::vector<long long> out;
  if (kind_ == Kind::table) {
    for (long long n : n_)
      if (n >= first && n <= last) out.push_back(n);
    return out;
  }
  for (long long n = std::max(first, 1LL); n <= last; ++n) out.push_back(n);
  return out;
}

std::string Trajectory::to_string() const {
  switch (kind_) {
    case Kind::linear: return "gen:linear(" + format_double(a_) + "," + format_double(b_) + ")";
    case Kind::affine_log:
      return "gen:affine_log(" + format_double(a_) + "," + format_double(b_) + "," + format_double(c_) + ")";
    case Kind::constant: {
      std::string s = "gen:constant(";
      for (std::size_t k = 0; k < point_.size(); ++k) s += (k ? "," : "") + format_double(point_[k]);
      return s + ")";
    }
    case Kind::table: return "table(" + std::to_string(n_.size()) + " rows)";
  }
  return {};
}

ScaleSequence ScaleSequence::linear(double a) {
  if (!(a > 0)) throw PreconditionError("linear scale needs a > 0");
  ScaleSequence s;
  s.kind_ = Kind::linear;
  s.a_ = a;
  return s;
}

ScaleSequence ScaleSequence::power(double c, double beta) {
  if (!(c > 0) || !(beta > 0)) throw PreconditionError("power scale needs c, beta > 0");
  ScaleSequence s;
  s.kind_ = Kind::power;
  s.a_ = c;
  s.b_ = beta;
  return s;
}

ScaleSequence ScaleSequence::geometric(double base) {
  if (!(base > 1)) throw PreconditionError("geometric scale needs base > 1");
  ScaleSequence s;
  s.kind_ = Kind::geometric;
  s.a_ = base;
  return s;
}

ScaleSequence ScaleSequence::parse(std::string_view spec) {
  if (!spec.starts_with("lambda:")) throw ParseError("scale spec must start with 'lambda:'");
  auto call = parse_call(spec.substr(7));
  if (call.first == "linear") {
    expect_args(call, 1);
    return linear(call.second[0]);
  }
  if (call.first == "power") {
    expect_args(call, 2);
    return power(call.second[0], call.second[1]);
  }
  if (call.first == "geometric") {
    expect_args(call, 1);
    return geometric(call.second[0]);
  }
  throw ParseError("unknown scale sequence '" + call.first + "'");
}

double ScaleSequence::operator()(long long n) const {
  const double x = static_cast<double>(n);
  switch (kind_) {
    case Kind::linear: return a_ * x;
    case Kind::power: return a_ * std::pow(x, b_);
    case Kind::geometric: return std::pow(a_, x);
  }
  return 0;
}

std::string ScaleSequence::to_string() const {
  switch (kind_) {
    case Kind::linear: return "lambda:linear(" + format_double(a_) + ")";
    case Kind::power: return "lambda:power(" + format_double(a_) + "," + format_double(b_) + ")";
    case Kind::geometric: return "lambda:geometric(" + format_double(a_) + ")";
  }
  return {};
}

// ---------------------------------------------------------------- panels

RescaledPanel rescaled_panel(const PointSpace& space, const std::vector<Index>& sample, double lambda, PanelMode mode) {
  if (sample.empty()) throw PreconditionError("rescaled_panel: empty sample");
  if (!(lambda > 0) || std::isinf(lambda)) throw PreconditionError("rescaled_panel: lambda must be positive and finite");
  RescaledPanel out;
  out.lambda = lambda;
  out.mode = mode;
  out.sample = sample;
  out.panel = subspace(space, sample);
  const double factor = mode == PanelMode::cone ? 1.0 / lambda : lambda;
  for (Index a = 0; a < sample.size(); ++a)
    for (Index b = a + 1; b < sample.size(); ++b) {
      const double d = space.distance(sample[a], sample[b]);
      out.panel.set_distance(a, b, ExtReal(std::isinf(d) ? kInf : d * factor));
    }
  return out;
}

ConeIdentityReport cone_identity_check(const PointSpace& space, Index p, double lambda, const std::vector<Index>& sample) {
  if (!space.infinity_point()) throw PreconditionError("cone_identity_check: space has no point at infinity");
  if (space.is_infinity(p)) throw PreconditionError("cone_identity_check: p must be finite");
  if (!(lambda > 0)) throw PreconditionError("cone_identity_check: lambda must be positive");
  const Index star = *space.infinity_point();

  std::vector<Index> xs;
  for (Index i : sample) {
    space.check_index(i);
    if (i != p && i != star && std::find(xs.begin(), xs.end(), i) == xs.end()) xs.push_back(i);
  }
  std::vector<Index> ids = xs;
  ids.push_back(p);
  ids.push_back(star);
  const PointSpace sub = subspace(space, ids);
  const Index sp = xs.size(), sstar = xs.size() + 1;
  const PointSpace cay = cayley_transform(sub, sp);
  const PointSpace inv = inverse_cayley_transform(sub, sp);

  ConeIdentityReport rep;
  auto record = [&](double got, double expected, double& slot) {
    const double e = rel_err(got, expected);
    slot = std::max(slot, e);
    rep.max_rel_error = std::max(rep.max_rel_error, e);
    rep.max_abs_error = std::max(rep.max_abs_error, std::abs(got - expected));
    ++rep.entries;
  };
  for (Index i = 0; i < xs.size(); ++i) {
    const double dpx = sub.distance(sp, i);
    record(cay.distance(sstar, i) / lambda, 1.0 / (lambda * dpx), rep.cayley_point_error);
    record(lambda * inv.distance(sstar, i), 1.0 / ((1.0 + dpx) / lambda), rep.inverse_point_error);
    for (Index j = i + 1; j < xs.size(); ++j) {
      const double dxy = sub.distance(i, j), dpy = sub.distance(sp, j);
      record(cay.distance(i, j) / lambda, (lambda * dxy) / ((lambda * dpx) * (lambda * dpy)), rep.cayley_pair_error);
      record(lambda * inv.distance(i, j), (lambda * dxy) / ((1.0 + dpx) * (1.0 + dpy)), rep.inverse_pair_error);
    }
  }
  return rep;
}

// ---------------------------------------------------------------- separation

SeparationReport eventual_separation(const Trajectory& x, const Trajectory& y, const ScaleSequence& lambda,
                                     const Gauge& g, long long first, long long last, double p) {
  if (x.dim() != y.dim()) throw PreconditionError("eventual_separation: trajectory dimensions differ");
  std::vector<long long> idx;
  for (long long n : x.indices(first, last))
    if (y.records(n)) idx.push_back(n);
  SeparationReport rep;
  rep.indices = idx.size();
  if (idx.empty()) return rep;
  const std::vector<double> zero(x.dim(), 0.0);

  struct Chunk {
    std::size_t separated = 0;
    std::optional<std::size_t> last_bad;
    double min_cone = kInf, mx = 0, my = 0;
  };
  auto chunks = parallel_chunks<Chunk>(idx.size(), [&](std::size_t b, std::size_t e) {
    Chunk c;
    for (std::size_t k = b; k < e; ++k) {
      const long long n = idx[k];
      const auto xn = x.at(n), yn = y.at(n);
      const double nx = lp_norm_diff(xn, zero, p), ny = lp_norm_diff(yn, zero, p);
      const double d = lp_norm_diff(xn, yn, p);
      const double l = lambda(n);
      if (d > g(nx + ny)) ++c.separated;
      else c.last_bad = k;
      c.min_cone = std::min(c.min_cone, d / l);
      c.mx = std::max(c.mx, nx / l);
      c.my = std::max(c.my, ny / l);
    }
    return c;
  }, 4096);

  std::optional<std::size_t> last_bad;
  rep.min_cone_distance = kInf;
  for (const auto& c : chunks) {
    rep.separated += c.separated;
    if (c.last_bad) last_bad = c.last_bad;
    rep.min_cone_distance = std::min(rep.min_cone_distance, c.min_cone);
    rep.witness_bound_x = std::max(rep.witness_bound_x, c.mx);
    rep.witness_bound_y = std::max(rep.witness_bound_y, c.my);
  }
  rep.separated_fraction = static_cast<double>(rep.separated) / static_cast<double>(idx.size());
  if (!last_bad) rep.first_separated_index = idx.front();
  else {
    rep.last_unseparated_index = idx[*last_bad];
    if (*last_bad + 1 < idx.size()) rep.first_separated_index = idx[*last_bad + 1];
  }
  return rep;
}

// ---------------------------------------------------------------- annulus

AnnulusWitness annulus_witness(const PointSpace& space, Index x, Index y, const Gauge& u, const Gauge& v) {
  if (!space.origin()) throw PreconditionError("annulus_witness: space has no origin");
  space.check_index(x);
  space.check_index(y);
  if (space.is_infinity(x) || space.is_infinity(y)) throw PreconditionError("annulus_witness: x and y must be finite");
  AnnulusWitness out;
  const double ny = space.norm(y);
  out.inner = 2.0 * u(4.0 * ny);
  out.outer = out.inner + v(ny);
  if (is_separated(space, u, x, y)) {
    out.status = AnnulusWitness::Status::already_separated;
    return out;
  }
  if (!(out.outer < ny)) throw PreconditionError("precondition scale too small");

  // Breadth-first search from the origin on the graph of steps < v(|q| + |y|).
  const Index q = *space.origin();
  const double step = v(space.norm(q) + ny);
  std::vector<Index> unvisited;
  for (Index i = 0; i < space.size(); ++i)
    if (i != q && !space.is_infinity(i)) unvisited.push_back(i);
  std::vector<Index> prev(space.size(), space.size());
  std::vector<Index> queue{q};
  prev[q] = q;
  bool reached = q == y;
  for (std::size_t head = 0; head < queue.size() && !reached; ++head) {
    const Index a = queue[head];
    for (std::size_t k = 0; k < unvisited.size();) {
      const Index b = unvisited[k];
      if (space.distance(a, b) < step) {
        prev[b] = a;
        queue.push_back(b);
        unvisited[k] = unvisited.back();
        unvisited.pop_back();
        if (b == y) reached = true;
      } else {
        ++k;
      }
    }
  }
  if (!reached) throw PreconditionError("annulus empty on sample");
  for (Index c = y; c != q; c = prev[c]) out.chain.push_back(c);
  out.chain.push_back(q);
  std::reverse(out.chain.begin(), out.chain.end());

  for (Index c : out.chain) {
    const double d = space.distance(c, y);
    if (d > out.inner && d <= out.outer) out.hits.push_back(c);
  }
  if (out.hits.empty()) throw PreconditionError("annulus empty on sample");
  out.status = AnnulusWitness::Status::witness;
  out.w = out.hits.front();
  out.separated_xw = is_separated(space, u, x, *out.w);
  out.separated_yw = is_separated(space, u, y, *out.w);
  return out;
}

ScaleRealization scale_realization(const PointSpace& space, double lambda, const Gauge& v, double epsilon,
                                   std::optional<bool> chained) {
  if (!space.origin()) throw PreconditionError("scale_realization: space has no origin");
  if (!(lambda > 0)) throw PreconditionError("scale_realization: lambda must be positive");
  if (!(epsilon >= 0)) throw PreconditionError("scale_realization: epsilon must be >= 0");
  std::optional<Index> best;
  double best_norm = kInf;
  for (Index i = 0; i < space.size(); ++i) {
    if (space.is_infinity(i)) continue;
    const double r = space.norm(i);
    if (r >= lambda && r < best_norm) {
      best = i;
      best_norm = r;
    }
  }
  if (!best) throw PreconditionError("scale_realization: no point outside the ball of radius " + format_double(lambda));
  ScaleRealization out;
  out.z = *best;
  out.norm = best_norm;
  out.ratio = lambda / best_norm;
  out.bound = 1.0 - v(best_norm) / best_norm;
  out.epsilon = epsilon;
  out.bound_holds = out.bound - epsilon / best_norm <= out.ratio && out.ratio <= 1.0;
  out.bound_asserted = chained.value_or(false);
  if (!chained) out.warning = "no chainedness certificate; bound not asserted";
  else if (!*chained) out.warning = "space is not asymptotically chained at v; bound not asserted";
  return out;
}

// ---------------------------------------------------------------- three-point checks

double interpolated_envelope(const ModulusEnvelope& env, double s) {
  const auto& st = env.steps();
  if (st.empty() || s < st.front().first) return 0.0;
  if (s >= st.back().first) return st.back().second;
  auto hi = std::upper_bound(st.begin(), st.end(), s,
                             [](double v, const std::pair<double, double>& p) { return v < p.first; });
  auto lo = std::prev(hi);
  const double w = (s - lo->first) / (hi->first - lo->first);
  return lo->second + w * (hi->second - lo->second);
}

QsReport induced_qs_check(const PointMap& map, const Gauge& g, const std::vector<double>& scales,
                          std::size_t sample_budget, std::uint64_t seed, const QsOptions& opts) {
  const PointSpace& src = map.source();
  const PointSpace& dst = map.target();
  if (!src.origin() || !dst.origin()) throw PreconditionError("induced_qs_check: source and target need origins");
  if (scales.empty()) throw PreconditionError("induced_qs_check: no scales");
  if (sample_budget == 0) throw PreconditionError("induced_qs_check: sample budget must be >= 1");

  QsReport rep;
  for (std::size_t k = 0; k < scales.size(); ++k) {
    const double lambda = scales[k];
    if (!(lambda > 0)) throw PreconditionError("induced_qs_check: scales must be positive");
    std::vector<Index> pool;
    for (Index i = 0; i < src.size(); ++i)
      if (!src.is_infinity(i) && src.norm(i) <= opts.window * lambda) pool.push_back(i);
    ScaleEnvelope se;
    se.lambda = lambda;
    se.candidates = pool.size();
    if (pool.size() < 3) throw PreconditionError("no separated triples at scale " + format_double(lambda));

    Rng rng(seed + 0x9e3779b97f4a7c15ULL * (k + 1));
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const double floor = opts.min_panel * lambda;
    std::set<std::tuple<Index, Index, Index>> seen;
    std::vector<EnvelopeSample> samples;
    const std::size_t attempts = sample_budget * opts.attempts_per_sample;
    for (std::size_t a = 0; a < attempts && samples.size() < sample_budget; ++a) {
      const Index x = pool[pick(rng)], y = pool[pick(rng)], w = pool[pick(rng)];
      if (x == y || x == w || y == w) continue;
      const double dxy = src.distance(x, y), dxw = src.distance(x, w);
      if (dxy < floor || dxw < floor) continue;
      if (!is_separated(src, g, x, y) || !is_separated(src, g, x, w) || !is_separated(src, g, y, w)) continue;
      if (!seen.emplace(x, y, w).second) continue;
      const double exy = dst.distance(map(x), map(y)), exw = dst.distance(map(x), map(w));
      if (!(exw > 0) || std::isinf(exw) || std::isinf(exy)) {
        ++se.degenerate;
        continue;
      }
      samples.push_back({dxy / dxw, exy / exw, Quadruple{x, y, w, x}});
    }
    if (samples.empty()) throw PreconditionError("no separated triples at scale " + format_double(lambda));
    se.envelope = ModulusEnvelope(std::move(samples), opts.envelope);
    rep.scales.push_back(std::move(se));
  }

  for (std::size_t k = 0; k + 1 < rep.scales.size(); ++k) {
    const auto& a = rep.scales[k].envelope.steps();
    const auto& b = rep.scales[k + 1].envelope.steps();
    const double lo = std::max(a.front().first, b.front().first);
    const double hi = std::min(a.back().first, b.back().first);
    if (lo > hi) {
      rep.drift.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    double drift = 0;
    for (const auto* st : {&a, &b})
      for (const auto& step : *st) {
        const double s = step.first;
        if (s < lo || s > hi) continue;
        drift = std::max(drift, std::abs(interpolated_envelope(rep.scales[k].envelope, s) -
                                         interpolated_envelope(rep.scales[k + 1].envelope, s)));
      }
    for (double s : {lo, hi})
      drift = std::max(drift, std::abs(interpolated_envelope(rep.scales[k].envelope, s) -
                                       interpolated_envelope(rep.scales[k + 1].envelope, s)));
    rep.drift.push_back(drift);
  }
  rep.drift_decreasing = !rep.drift.empty();
  for (std::size_t k = 0; k < rep.drift.size(); ++k) {
    if (std::isnan(rep.drift[k])) rep.drift_decreasing = false;
    if (k > 0 && !(rep.drift[k] < rep.drift[k - 1])) rep.drift_decreasing = false;
  }
  return rep;
}

}  // namespace mobius

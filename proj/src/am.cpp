#include "mobius/am.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "mobius/error.hpp"
#include "mobius/sampling.hpp"

namespace mobius {

bool is_separated(const PointSpace& space, const Gauge& g, Index x, Index y) {
  if (!space.origin()) throw PreconditionError("is_separated: space has no origin");
  space.check_index(x);
  space.check_index(y);
  if (space.is_infinity(x) || space.is_infinity(y)) return true;
  return space.distance(x, y) > g(space.norm(x) + space.norm(y));
}

ModulusEnvelope::ModulusEnvelope(std::vector<EnvelopeSample> samples, const EnvelopeOptions& opts)
    : samples_(std::move(samples)) {
  std::sort(samples_.begin(), samples_.end(), [](const EnvelopeSample& a, const EnvelopeSample& b) {
    return a.s < b.s || (a.s == b.s && a.quadruple < b.quadruple);
  });
  double running = 0;
  for (const auto& smp : samples_) {
    running = std::max(running, smp.t);
    if (!steps_.empty() && steps_.back().first == smp.s) steps_.back().second = running;
    else steps_.emplace_back(smp.s, running);
    if (smp.s <= opts.small_source && smp.t >= opts.large_image) violations_.push_back(smp);
  }
}

double ModulusEnvelope::operator()(double s) const {
  auto it = std::upper_bound(steps_.begin(), steps_.end(), s,
                             [](double v, const std::pair<double, double>& p) { return v < p.first; });
  if (it == steps_.begin()) return 0.0;
  return std::prev(it)->second;
}

bool ModulusEnvelope::is_consistent() const {
  for (std::size_t i = 1; i < steps_.size(); ++i)
    if (steps_[i].second < steps_[i - 1].second) return false;
  return std::all_of(samples_.begin(), samples_.end(),
                     [this](const EnvelopeSample& smp) { return smp.t <= (*this)(smp.s); });
}

PowerFit ModulusEnvelope::fit_power_law() const {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& smp : samples_) {
    if (!(smp.t > 0) || std::isinf(smp.t)) continue;
    const double x = std::log(smp.s), y = std::log(smp.t);
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  PowerFit fit;
  if (n < 2) return fit;
  const double denom = n * sxx - sx * sx;
  fit.slope = denom != 0 ? (n * sxy - sx * sy) / denom : 0.0;
  fit.offset = (sy - fit.slope * sx) / n;
  for (const auto& smp : samples_) {
    if (!(smp.t > 0) || std::isinf(smp.t)) continue;
    fit.max_residual = std::max(fit.max_residual, std::abs(std::log(smp.t) - fit.slope * std::log(smp.s) - fit.offset));
  }
  return fit;
}

double ModulusEnvelope::max_power_deviation(double alpha) const {
  double worst = 0;
  for (const auto& smp : samples_) {
    const double expect = std::pow(smp.s, alpha);
    worst = std::max(worst, std::abs(smp.t - expect) / std::max(1.0, expect));
  }
  return worst;
}

ModulusEnvelope am_envelope(const PointMap& map, const Gauge& g, std::size_t sample_budget, std::uint64_t seed,
                            const EnvelopeOptions& opts) {
  const PointSpace& src = map.source();
  if (!src.origin()) throw PreconditionError("am_envelope: source space has no origin");
  if (!src.infinity_point()) throw PreconditionError("am_envelope: source space has no point at infinity");
  if (sample_budget == 0) throw PreconditionError("am_envelope: sample budget must be >= 1");
  const std::size_t n = src.size();

  auto pairwise_separated = [&](const Quadruple& q) {
    const Index p[4] = {q.x, q.y, q.z, q.w};
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        if (p[i] == p[j] || !is_separated(src, g, p[i], p[j])) return false;
    return true;
  };

  std::vector<Quadruple> quads;
  if (valid_quadruple_count(n) <= sample_budget * opts.attempts_per_sample) {
    // Small space: enumerate, keep the separated ones, subsample if needed.
    for (const auto& q : sample_quadruples(n, valid_quadruple_count(n), seed))
      if (pairwise_separated(q)) quads.push_back(q);
    if (quads.size() > sample_budget) {
      std::shuffle(quads.begin(), quads.end(), Rng(seed));
      quads.resize(sample_budget);
    }
  } else {
    Rng rng(seed);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    std::set<Quadruple> seen;
    const std::size_t attempts = sample_budget * opts.attempts_per_sample;
    for (std::size_t a = 0; a < attempts && quads.size() < sample_budget; ++a) {
      const Quadruple q{pick(rng), pick(rng), pick(rng), pick(rng)};
      if (pairwise_separated(q) && seen.insert(q).second) quads.push_back(q);
    }
  }
  if (quads.empty()) throw PreconditionError("no separated quadruples at this gauge/scale");

  std::vector<EnvelopeSample> samples;
  std::size_t degenerate = 0;
  for (const auto& q : quads) {
    const Quadruple img{map(q.x), map(q.y), map(q.z), map(q.w)};
    const auto s = cross_ratio(src, q);
    if (img.x == img.w || img.y == img.z || !s) {
      ++degenerate;
      continue;
    }
    const auto t = cross_ratio(map.target(), img);
    if (!t) {
      ++degenerate;
      continue;
    }
    samples.push_back({s->value(), t->value(), q});
  }
  ModulusEnvelope env(std::move(samples), opts);
  env.degenerate = degenerate;
  return env;
}

ChainReport check_asymptotically_chained(const PointSpace& space, const Gauge& v, std::size_t max_witnesses) {
  if (!space.origin()) throw PreconditionError("check_asymptotically_chained: space has no origin");
  std::vector<Index> pts;
  for (Index i = 0; i < space.size(); ++i)
    if (!space.is_infinity(i)) pts.push_back(i);
  const std::size_t m = pts.size();
  ChainReport rep;
  if (m < 2) return rep;

  // Prim's algorithm on the complete graph of finite points.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best(m, kInf);
  std::vector<std::size_t> parent(m, 0);
  std::vector<bool> in_tree(m, false);
  std::vector<std::vector<std::pair<std::size_t, double>>> tree(m);
  best[0] = 0;
  for (std::size_t step = 0; step < m; ++step) {
    std::size_t u = m;
    for (std::size_t i = 0; i < m; ++i)
      if (!in_tree[i] && (u == m || best[i] < best[u])) u = i;
    in_tree[u] = true;
    if (step > 0) {
      tree[u].emplace_back(parent[u], best[u]);
      tree[parent[u]].emplace_back(u, best[u]);
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (in_tree[i]) continue;
      const double d = space.distance(pts[u], pts[i]);
      if (d < best[i]) {
        best[i] = d;
        parent[i] = u;
      }
    }
  }

  std::vector<double> norm(m);
  for (std::size_t i = 0; i < m; ++i) norm[i] = space.norm(pts[i]);

  // Bottleneck from every source by a tree traversal.
  std::vector<double> bottleneck(m);
  std::vector<std::size_t> via(m);
  std::vector<std::pair<std::size_t, std::size_t>> failing;
  std::vector<std::size_t> stack;
  bool have_worst = false;
  for (std::size_t s = 0; s < m; ++s) {
    std::fill(via.begin(), via.end(), m);
    bottleneck[s] = 0;
    via[s] = s;
    stack.assign(1, s);
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (auto [w, len] : tree[u])
        if (via[w] == m) {
          via[w] = u;
          bottleneck[w] = std::max(bottleneck[u], len);
          stack.push_back(w);
        }
    }
    for (std::size_t t = s + 1; t < m; ++t) {
      ++rep.pairs;
      const double threshold = v(norm[s] + norm[t]);
      const bool ok = bottleneck[t] < threshold;
      const double ratio = threshold > 0 ? bottleneck[t] / threshold : kInf;
      if (!ok) {
        ++rep.failing_pairs;
        if (failing.size() < max_witnesses) failing.emplace_back(s, t);
      }
      if (!have_worst || ratio > rep.worst_ratio) {
        have_worst = true;
        rep.worst_ratio = ratio;
        rep.worst_x = pts[s];
        rep.worst_y = pts[t];
        rep.worst_bottleneck = bottleneck[t];
        rep.worst_threshold = threshold;
      }
    }
  }
  rep.chained = rep.failing_pairs == 0;

  auto tree_path = [&](std::size_t a, std::size_t b) {
    std::vector<std::size_t> prev(m, m);
    prev[a] = a;
    std::vector<std::size_t> st{a};
    while (!st.empty()) {
      const std::size_t u = st.back();
      st.pop_back();
      for (auto [w, len] : tree[u])
        if (prev[w] == m) {
          prev[w] = u;
          st.push_back(w);
        }
    }
    std::vector<Index> path;
    for (std::size_t c = b; c != a; c = prev[c]) path.push_back(pts[c]);
    path.push_back(pts[a]);
    std::reverse(path.begin(), path.end());
    return path;
  };
  auto local = [&](Index id) {
    return static_cast<std::size_t>(std::lower_bound(pts.begin(), pts.end(), id) - pts.begin());
  };
  rep.witness_chains.push_back(tree_path(local(rep.worst_x), local(rep.worst_y)));
  for (auto [a, b] : failing) {
    if (pts[a] == rep.worst_x && pts[b] == rep.worst_y) continue;
    rep.witness_chains.push_back(tree_path(a, b));
  }
  return rep;
}

AmConstants sbe_to_am(const SbeConstants& k) {
  if (!(k.c_prime > 0)) throw PreconditionError("sbe_to_am: c' must be positive");
  if (!(k.c > 0) || !(k.C >= 0) || !(k.C_prime >= 0)) throw PreconditionError("sbe_to_am: constants must be nonnegative, c > 0");
  AmConstants out;
  if (k.C_prime == 0) {
    if (k.C == 0) {
      out.v = k.u.scaled(0.0);
      out.upper_factor = k.c;
      out.lower_factor = k.c_prime;
      out.D = std::max(k.c, 1.0 / k.c_prime);
      out.bilipschitz_all_scales = true;
      return out;
    }
    // Only the upper bound carries a sublinear term: separate at 2 (C/c) u.
    out.v = k.u.scaled(2.0 * k.C / k.c);
    out.upper_factor = 1.5 * k.c;
    out.lower_factor = k.c_prime;
    out.D = std::max(out.upper_factor, 1.0 / k.c_prime);
    return out;
  }
  out.v = k.u.scaled(2.0 * k.C_prime / k.c_prime);
  out.upper_factor = k.c + k.C * k.c_prime / (2.0 * k.C_prime);
  out.lower_factor = k.c_prime / 2.0;
  out.D = std::max(out.upper_factor, 2.0 / k.c_prime);
  return out;
}

SyntheticSbe synthetic_sbe_map(const PointSpace& source, double a, double beta, const Gauge& u, std::uint64_t seed) {
  if (!source.has_coords() || !source.origin())
    throw PreconditionError("synthetic_sbe_map: needs a coordinate space with an origin");
  if (!(a > 0) || !(beta >= 0)) throw PreconditionError("synthetic_sbe_map: a > 0, beta >= 0");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double theta = angle(rng);
  const double cs = std::cos(theta), sn = std::sin(theta);

  std::vector<std::vector<double>> image;
  image.reserve(source.size());
  for (Index i = 0; i < source.size(); ++i) {
    std::vector<double> x = source.coords(i);
    if (source.is_infinity(i)) {
      image.emplace_back();
      continue;
    }
    std::vector<double> y(x.size());
    if (x.size() == 2) {
      y[0] = a * (cs * x[0] - sn * x[1]);
      y[1] = a * (sn * x[0] + cs * x[1]);
    } else {
      for (std::size_t k = 0; k < x.size(); ++k) y[k] = a * x[k];
    }
    // noise vector of norm <= (beta/2) u(|x|), uniform direction in the box
    std::vector<double> noise(x.size());
    double nn = 0;
    for (auto& e : noise) {
      e = unit(rng);
      nn += e * e;
    }
    nn = std::sqrt(nn);
    const double radius = 0.5 * beta * u(source.norm(i)) * std::abs(unit(rng));
    for (std::size_t k = 0; k < x.size(); ++k) y[k] += nn > 0 ? noise[k] / nn * radius : 0.0;
    image.push_back(std::move(y));
  }
  PointSpace target = PointSpace::from_coords(source.labels(), std::move(image), source.lp_exponent());
  target.set_origin(source.origin());
  target.set_infinity_point(source.infinity_point());
  std::vector<Index> id(source.size());
  for (Index i = 0; i < id.size(); ++i) id[i] = i;
  SyntheticSbe out{PointMap(source, std::move(target), std::move(id)), {}};
  out.constants = SbeConstants{a, beta, a, beta, u};
  return out;
}

}  // namespace mobius

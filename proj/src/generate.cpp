#include "mobius/generate.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>

#include "mobius/error.hpp"
#include "mobius/space_io.hpp"

namespace mobius {

namespace {

void check_budget(std::size_t n, const GenerateOptions& opts) {
  if (n + (opts.with_infinity ? 1 : 0) > opts.max_points)
    throw PreconditionError("generated space has " + std::to_string(n) +
                            " points, above the point budget " + std::to_string(opts.max_points));
}

void finish(PointSpace& s, const GenerateOptions& opts) {
  if (opts.with_infinity) s.add_infinity_point("inf");
}

using Element = std::vector<long long>;

struct Group {
  WordGroup kind;
  int rank;

  Element identity() const {
    if (kind == WordGroup::heisenberg) return Element(3, 0);
    if (kind == WordGroup::zd) return Element(static_cast<std::size_t>(rank), 0);
    return {};
  }

  std::vector<Element> generators() const {
    std::vector<Element> gens;
    if (kind == WordGroup::free) {
      for (int i = 1; i <= rank; ++i) {
        gens.push_back({i});
        gens.push_back({-i});
      }
      return gens;
    }
    const int d = kind == WordGroup::heisenberg ? 2 : rank;
    for (int i = 0; i < d; ++i)
      for (int s : {1, -1}) {
        Element e = identity();
        e[static_cast<std::size_t>(i)] = s;
        gens.push_back(e);
      }
    return gens;
  }

  Element mul(const Element& g, const Element& h) const {
    switch (kind) {
      case WordGroup::zd: {
        Element r = g;
        for (std::size_t i = 0; i < r.size(); ++i) r[i] += h[i];
        return r;
      }
      case WordGroup::heisenberg:
        return {g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[0] * h[1]};
      case WordGroup::free: {
        Element r = g;
        for (long long letter : h) {
          if (!r.empty() && r.back() == -letter) r.pop_back();
          else r.push_back(letter);
        }
        return r;
      }
    }
    return {};
  }

  Element inv(const Element& g) const {
    switch (kind) {
      case WordGroup::zd: {
        Element r = g;
        for (auto& v : r) v = -v;
        return r;
      }
      case WordGroup::heisenberg:
        return {-g[0], -g[1], -g[2] + g[0] * g[1]};
      case WordGroup::free: {
        Element r(g.rbegin(), g.rend());
        for (auto& v : r) v = -v;
        return r;
      }
    }
    return {};
  }

  std::string label(const Element& g) const {
    if (kind == WordGroup::free) {
      if (g.empty()) return "e";
      std::string s;
      for (long long l : g) {
        const char base = l > 0 ? 'a' : 'A';
        s += static_cast<char>(base + (std::llabs(l) - 1));
      }
      return s;
    }
    std::string s;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (i) s += ':';
      s += std::to_string(g[i]);
    }
    return s;
  }
};

}  // namespace

PointSpace real_line_grid(double start, double step, std::size_t count, const GenerateOptions& opts) {
  if (!(step > 0)) throw PreconditionError("real_line_grid: step must be positive");
  std::vector<double> xs(count);
  for (std::size_t i = 0; i < count; ++i) xs[i] = start + step * static_cast<double>(i);
  return real_line_points(xs, opts);
}

PointSpace real_line_points(const std::vector<double>& xs, const GenerateOptions& opts) {
  check_budget(xs.size(), opts);
  std::vector<std::string> labels;
  std::vector<std::vector<double>> coords;
  std::optional<Index> origin;
  for (double x : xs) {
    if (x == 0.0) origin = labels.size();
    labels.push_back(format_double(x));
    coords.push_back({x});
  }
  PointSpace s = PointSpace::from_coords(std::move(labels), std::move(coords), 2.0);
  s.set_origin(origin);
  s.metadata()["kind"] = "real_line";
  finish(s, opts);
  return s;
}

PointSpace lp_grid(double p, int dims, int side, const GenerateOptions& opts) {
  if (dims < 1 || side < 1) throw PreconditionError("lp_grid: dims and side must be positive");
  const double total = std::pow(static_cast<double>(side), dims);
  if (total > static_cast<double>(opts.max_points))
    throw PreconditionError("lp_grid: side^dims exceeds the point budget");
  const auto n = static_cast<std::size_t>(total);
  std::vector<std::string> labels;
  std::vector<std::vector<double>> coords;
  for (std::size_t code = 0; code < n; ++code) {
    std::vector<double> c(static_cast<std::size_t>(dims));
    std::size_t rest = code;
    std::string label;
    for (int k = dims - 1; k >= 0; --k) {
      c[static_cast<std::size_t>(k)] = static_cast<double>(rest % static_cast<std::size_t>(side));
      rest /= static_cast<std::size_t>(side);
    }
    for (int k = 0; k < dims; ++k) {
      if (k) label += ':';
      label += std::to_string(static_cast<long long>(c[static_cast<std::size_t>(k)]));
    }
    labels.push_back(label);
    coords.push_back(std::move(c));
  }
  PointSpace s = PointSpace::from_coords(std::move(labels), std::move(coords), p);
  s.set_origin(0);
  s.metadata()["kind"] = "lp_grid";
  s.metadata()["p"] = format_double(p);
  finish(s, opts);
  return s;
}

PointSpace coords_space(std::vector<std::vector<double>> coords, double p, std::optional<Index> origin,
                        const GenerateOptions& opts) {
  check_budget(coords.size(), opts);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < coords.size(); ++i) labels.push_back("p" + std::to_string(i));
  PointSpace s = PointSpace::from_coords(std::move(labels), std::move(coords), p);
  s.set_origin(origin);
  finish(s, opts);
  return s;
}

PointSpace word_metric_ball(const WordMetricParams& params, const GenerateOptions& opts) {
  if (params.radius < 0) throw PreconditionError("word metric radius must be >= 0");
  if (params.group != WordGroup::heisenberg && params.rank < 1)
    throw PreconditionError("word metric rank must be >= 1");
  const Group group{params.group, params.rank};
  const auto gens = group.generators();

  std::vector<Element> elems{group.identity()};
  std::vector<int> length{0};
  std::map<Element, Index> where{{elems[0], 0}};
  for (std::size_t head = 0; head < elems.size(); ++head) {
    if (length[head] == params.radius) continue;
    for (const auto& s : gens) {
      Element next = group.mul(elems[head], s);
      if (where.count(next)) continue;
      if (elems.size() + 1 > opts.max_points)
        throw PreconditionError("word metric ball of radius " + std::to_string(params.radius) +
                                " exceeds the point budget " + std::to_string(opts.max_points));
      where.emplace(next, elems.size());
      elems.push_back(std::move(next));
      length.push_back(length[head] + 1);
    }
  }

  const std::size_t n = elems.size();
  std::vector<std::string> labels;
  for (const auto& e : elems) labels.push_back(group.label(e));
  PointSpace s(labels);

  std::vector<std::vector<Index>> adj(n);
  for (Index i = 0; i < n; ++i)
    for (const auto& g : gens) {
      auto it = where.find(group.mul(elems[i], g));
      if (it != where.end()) adj[i].push_back(it->second);
    }

  // Distances are graph distances in the ball's induced Cayley subgraph, which
  // is a genuine metric. A pair is "clipped" when that differs from the true
  // word distance |g^-1 h|, or when the true distance is not known because
  // g^-1 h falls outside the ball (heisenberg only; Z^d and free lengths are
  // closed-form).
  auto known_length = [&](const Element& e) -> std::optional<long long> {
    if (params.group == WordGroup::free) return static_cast<long long>(e.size());
    if (params.group == WordGroup::zd) {
      long long l = 0;
      for (long long v : e) l += std::llabs(v);
      return l;
    }
    auto it = where.find(e);
    if (it == where.end()) return std::nullopt;
    return length[it->second];
  };
  std::size_t clipped = 0;
  std::vector<int> graph(n);
  for (Index i = 0; i < n; ++i) {
    std::fill(graph.begin(), graph.end(), -1);
    graph[i] = 0;
    std::deque<Index> queue{i};
    while (!queue.empty()) {
      const Index u = queue.front();
      queue.pop_front();
      for (Index v : adj[u])
        if (graph[v] < 0) {
          graph[v] = graph[u] + 1;
          queue.push_back(v);
        }
    }
    const Element gi = group.inv(elems[i]);
    for (Index j = i + 1; j < n; ++j) {
      const auto truth = known_length(group.mul(gi, elems[j]));
      if (!truth || *truth != graph[j]) ++clipped;
      s.set_distance(i, j, graph[j]);
    }
  }
  s.set_origin(0);
  static const char* names[] = {"Zd", "free", "heisenberg_Z"};
  s.metadata()["kind"] = "word_metric";
  s.metadata()["group"] = names[static_cast<int>(params.group)];
  s.metadata()["radius"] = std::to_string(params.radius);
  s.metadata()["clipped_pairs"] = std::to_string(clipped);
  finish(s, opts);
  return s;
}

PointSpace random_euclidean_space(std::size_t n, int dims, std::uint64_t seed, const GenerateOptions& opts) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> coords(n, std::vector<double>(static_cast<std::size_t>(dims)));
  for (auto& c : coords)
    for (auto& v : c) v = gauss(rng);
  return coords_space(std::move(coords), 2.0, n ? std::optional<Index>(0) : std::nullopt, opts)
      .materialized();
}

PointSpace random_quasimetric(std::size_t n, int dims, double k, std::uint64_t seed) {
  if (!(k >= 1.0)) throw PreconditionError("quasimetric constant must be >= 1");
  PointSpace s = random_euclidean_space(n, dims, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> logscale(-std::log(k), std::log(k));
  for (Index a = 0; a < n; ++a)
    for (Index b = a + 1; b < n; ++b) s.set_distance(a, b, s.distance(a, b) * std::exp(logscale(rng)));
  s.set_quasimetric_k(k, KStatus::declared);
  s.metadata()["kind"] = "random_quasimetric";
  return s;
}

}  // namespace mobius

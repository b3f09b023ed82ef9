#include "mobius/cotype.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "mobius/error.hpp"
#include "mobius/parallel.hpp"
#include "mobius/sampling.hpp"
#include "mobius/space_io.hpp"

namespace mobius {

namespace {

std::uint64_t ipow(std::uint64_t b, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

/// b^e, or nullopt once it exceeds `cap`.
std::optional<std::uint64_t> capped_pow(std::uint64_t b, std::uint64_t e, std::uint64_t cap) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < e; ++i) {
    if (b != 0 && r > cap / b) return std::nullopt;
    r *= b;
  }
  return r;
}

void check_params(int n, int m, double q) {
  if (n < 1) throw PreconditionError("cotype: n must be >= 1");
  if (m < 2 || m % 2 != 0) throw PreconditionError("cotype: m must be even and >= 2");
  if (!(q > 0)) throw PreconditionError("cotype: q must be positive");
  if (ipow(static_cast<std::uint64_t>(m), n) > 50'000'000ULL) throw PreconditionError("cotype: m^n too large");
}

/// d(a,b)^q / unit^q for every pair of target points.
struct PowerTable {
  std::size_t size = 0;
  double unit = 1;
  std::vector<double> v;

  PowerTable(const PointSpace& t, double q) : size(t.size()) {
    if (q > 8) {
      const double diam = t.max_finite_distance();
      if (diam > 0) unit = diam;
    }
    v.assign(size * size, 0.0);
    for (Index a = 0; a < size; ++a)
      for (Index b = a + 1; b < size; ++b) {
        const double d = t.distance(a, b);
        const double x = std::isinf(d) ? std::numeric_limits<double>::infinity() : std::pow(d / unit, q);
        v[a * size + b] = v[b * size + a] = x;
      }
  }
  double operator()(Index a, Index b) const { return v[a * size + b]; }
};

/// Neighbour structure of Z_m^n.
struct Torus {
  int n, m;
  std::size_t cells, eps_count;
  std::vector<std::size_t> half;  ///< cells * n: x + (m/2) e_j
  std::vector<std::size_t> step;  ///< cells * eps_count: x + eps

  Torus(int n_, int m_) : n(n_), m(m_) {
    cells = ipow(static_cast<std::uint64_t>(m), n);
    eps_count = ipow(3, n);
    std::vector<std::size_t> pw(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) pw[static_cast<std::size_t>(k)] = ipow(static_cast<std::uint64_t>(m), k);
    half.resize(cells * static_cast<std::size_t>(n));
    step.resize(cells * eps_count);
    std::vector<int> digits(static_cast<std::size_t>(n));
    for (std::size_t x = 0; x < cells; ++x) {
      std::size_t r = x;
      for (int k = 0; k < n; ++k) {
        digits[static_cast<std::size_t>(k)] = static_cast<int>(r % static_cast<std::size_t>(m));
        r /= static_cast<std::size_t>(m);
      }
      for (int j = 0; j < n; ++j) {
        const int d = digits[static_cast<std::size_t>(j)];
        const int nd = (d + m / 2) % m;
        half[x * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] =
            x + (static_cast<std::size_t>(nd) - static_cast<std::size_t>(d)) * pw[static_cast<std::size_t>(j)];
      }
      for (std::size_t e = 0; e < eps_count; ++e) {
        std::size_t r2 = e, idx = 0;
        for (int k = 0; k < n; ++k) {
          const int eps = static_cast<int>(r2 % 3) - 1;
          r2 /= 3;
          const int nd = ((digits[static_cast<std::size_t>(k)] + eps) % m + m) % m;
          idx += static_cast<std::size_t>(nd) * pw[static_cast<std::size_t>(k)];
        }
        step[x * eps_count + e] = idx;
      }
    }
  }
};

/// Raw sums L = sum_{x,j} d^q(f(x + h e_j), f(x)) and R = sum_{x,eps} d^q(f(x+eps), f(x)).
struct Sums {
  double l = 0, r = 0;
};

Sums full_sums(const Torus& tor, const PowerTable& dq, const std::vector<Index>& f) {
  Sums s;
  const auto n = static_cast<std::size_t>(tor.n);
  for (std::size_t x = 0; x < tor.cells; ++x) {
    for (std::size_t j = 0; j < n; ++j) s.l += dq(f[tor.half[x * n + j]], f[x]);
    for (std::size_t e = 0; e < tor.eps_count; ++e) s.r += dq(f[tor.step[x * tor.eps_count + e]], f[x]);
  }
  return s;
}

double ratio_from(const Torus& tor, double q, double l, double r) {
  if (r <= 0) return 0.0;
  return l * static_cast<double>(tor.eps_count) / (std::pow(static_cast<double>(tor.m), q) * r);
}

/// Change of (L, R) when cell c switches from f[c] to b.
Sums delta(const Torus& tor, const PowerTable& dq, const std::vector<Index>& f, std::size_t c, Index b) {
  const Index a = f[c];
  const auto n = static_cast<std::size_t>(tor.n);
  Sums d;
  for (std::size_t j = 0; j < n; ++j) {
    const Index v = f[tor.half[c * n + j]];
    d.l += 2.0 * (dq(v, b) - dq(v, a));
  }
  for (std::size_t e = 0; e < tor.eps_count; ++e) {
    const std::size_t nb = tor.step[c * tor.eps_count + e];
    if (nb == c) continue;
    const Index v = f[nb];
    d.r += 2.0 * (dq(v, b) - dq(v, a));
  }
  return d;
}

struct RestartResult {
  std::vector<Index> f;
  double ratio = 0;
  std::size_t steps = 0;
  std::uint64_t evaluated = 0;
};

RestartResult hill_climb(const Torus& tor, const PowerTable& dq, double q, std::vector<Index> f, std::size_t max_steps) {
  const std::size_t t = dq.size;
  const auto n = static_cast<std::size_t>(tor.n);
  Sums s = full_sums(tor, dq, f);
  double current = ratio_from(tor, q, s.l, s.r);
  RestartResult out;
  std::vector<double> acc_l(t), acc_r(t);
  for (; out.steps < max_steps;) {
    double best = current;
    std::size_t best_c = 0;
    Index best_b = 0;
    bool found = false;
    for (std::size_t c = 0; c < tor.cells; ++c) {
      // For every candidate value b: sum over neighbours of d^q(v, b).
      std::fill(acc_l.begin(), acc_l.end(), 0.0);
      std::fill(acc_r.begin(), acc_r.end(), 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const Index v = f[tor.half[c * n + j]];
        for (Index b = 0; b < t; ++b) acc_l[b] += dq(v, b);
      }
      for (std::size_t e = 0; e < tor.eps_count; ++e) {
        const std::size_t nb = tor.step[c * tor.eps_count + e];
        if (nb == c) continue;
        const Index v = f[nb];
        for (Index b = 0; b < t; ++b) acc_r[b] += dq(v, b);
      }
      const Index a = f[c];
      for (Index b = 0; b < t; ++b) {
        if (b == a) continue;
        ++out.evaluated;
        const double l = s.l + 2.0 * (acc_l[b] - acc_l[a]);
        const double r = s.r + 2.0 * (acc_r[b] - acc_r[a]);
        const double cand = ratio_from(tor, q, l, r);
        if (cand > best * (1.0 + 1e-12) + 1e-300) {
          best = cand;
          best_c = c;
          best_b = b;
          found = true;
        }
      }
    }
    if (!found) break;
    const Sums d = delta(tor, dq, f, best_c, best_b);
    s.l += d.l;
    s.r += d.r;
    f[best_c] = best_b;
    current = best;
    ++out.steps;
  }
  const Sums exact = full_sums(tor, dq, f);
  out.ratio = ratio_from(tor, q, exact.l, exact.r);
  out.f = std::move(f);
  return out;
}

}  // namespace

std::size_t CotypeInstance::cells() const { return ipow(static_cast<std::uint64_t>(m), n); }

void CotypeInstance::validate() const {
  check_params(n, m, q);
  if (!target || target->empty()) throw PreconditionError("cotype: empty target");
  if (f.size() != cells())
    throw PreconditionError("cotype: f has " + std::to_string(f.size()) + " entries, expected m^n = " +
                            std::to_string(cells()));
  for (Index v : f) target->check_index(v);
}

CotypeSides cotype_sides(const CotypeInstance& inst, const CotypeOptions& opts) {
  inst.validate();
  const Torus tor(inst.n, inst.m);
  const PowerTable dq(*inst.target, inst.q);
  const double mq = std::pow(static_cast<double>(inst.m), inst.q);
  const std::uint64_t terms = tor.cells * tor.eps_count;
  const bool exhaustive =
      opts.mode == SideMode::exhaustive || (opts.mode == SideMode::automatic && terms <= opts.enumeration_budget);

  CotypeSides out;
  out.distance_unit = dq.unit;
  const auto n = static_cast<std::size_t>(inst.n);
  if (exhaustive) {
    out.exhaustive = true;
    // Per-cell partial sums, reduced serially: same bits for any thread count.
    std::vector<double> pl(tor.cells), pr(tor.cells);
    parallel_chunks<int>(tor.cells, [&](std::size_t b, std::size_t e) {
      for (std::size_t x = b; x < e; ++x) {
        double l = 0, r = 0;
        for (std::size_t j = 0; j < n; ++j) l += dq(inst.f[tor.half[x * n + j]], inst.f[x]);
        for (std::size_t k = 0; k < tor.eps_count; ++k) r += dq(inst.f[tor.step[x * tor.eps_count + k]], inst.f[x]);
        pl[x] = l;
        pr[x] = r;
      }
      return 0;
    }, 1024);
    double l = 0, r = 0;
    for (std::size_t x = 0; x < tor.cells; ++x) {
      l += pl[x];
      r += pr[x];
    }
    out.lhs = l / static_cast<double>(tor.cells);
    out.rhs = mq * r / static_cast<double>(tor.cells * tor.eps_count);
  } else {
    if (opts.mc_samples < 2) throw PreconditionError("cotype: Monte Carlo needs at least 2 samples");
    out.exhaustive = false;
    out.samples = opts.mc_samples;
    Rng rng(opts.seed);
    std::uniform_int_distribution<std::size_t> cell(0, tor.cells - 1), coord(0, n - 1), sign(0, tor.eps_count - 1);
    auto moments = [&](auto&& draw, double scale, double& mean, double& se) {
      double sum = 0, sum2 = 0;
      for (std::size_t i = 0; i < opts.mc_samples; ++i) {
        const double v = draw();
        sum += v;
        sum2 += v * v;
      }
      const double nn = static_cast<double>(opts.mc_samples);
      const double mu = sum / nn;
      const double var = std::max(0.0, (sum2 - nn * mu * mu) / (nn - 1));
      mean = scale * mu;
      se = scale * std::sqrt(var / nn);
    };
    moments([&] {
      const std::size_t x = cell(rng);
      return dq(inst.f[tor.half[x * n + coord(rng)]], inst.f[x]);
    }, static_cast<double>(n), out.lhs, out.lhs_stderr);
    moments([&] {
      const std::size_t x = cell(rng);
      return dq(inst.f[tor.step[x * tor.eps_count + sign(rng)]], inst.f[x]);
    }, mq, out.rhs, out.rhs_stderr);
  }
  out.ratio = out.rhs > 0 ? out.lhs / out.rhs : 0.0;
  return out;
}

std::vector<Index> lift_table(const std::vector<Index>& f, int n_from, int m) {
  const std::size_t cells = ipow(static_cast<std::uint64_t>(m), n_from);
  if (f.size() != cells) throw PreconditionError("lift_table: table size does not match m^n");
  std::vector<Index> out(cells * static_cast<std::size_t>(m));
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = f[x % cells];
  return out;
}

CotypeSearchResult cotype_search(int n, int m, double q, std::shared_ptr<const PointSpace> target,
                                 const SearchOptions& opts) {
  check_params(n, m, q);
  if (!target || target->empty()) throw PreconditionError("cotype_search: empty target");
  const Torus tor(n, m);
  const PowerTable dq(*target, q);
  const std::size_t t = target->size();
  CotypeSearchResult res;

  const auto total = capped_pow(t, tor.cells, opts.budget);
  if (total) {
    // Odometer over all |T|^(m^n) tables, sums updated incrementally.
    res.method = "exhaustive";
    std::vector<Index> f(tor.cells, 0);
    Sums s = full_sums(tor, dq, f);
    res.best_f = f;
    res.best_ratio = ratio_from(tor, q, s.l, s.r);
    res.evaluated = 1;
    for (std::uint64_t k = 1; k < *total; ++k) {
      for (std::size_t c = 0; c < tor.cells; ++c) {
        const Index b = f[c] + 1 == t ? 0 : f[c] + 1;
        const Sums d = delta(tor, dq, f, c, b);
        s.l += d.l;
        s.r += d.r;
        f[c] = b;
        if (b != 0) break;
      }
      ++res.evaluated;
      const double r = ratio_from(tor, q, s.l, s.r);
      if (r > res.best_ratio * (1.0 + 1e-12) + 1e-300) {
        res.best_ratio = r;
        res.best_f = f;
      }
    }
    const Sums exact = full_sums(tor, dq, res.best_f);
    res.best_ratio = ratio_from(tor, q, exact.l, exact.r);
  } else {
    res.method = "local_search";
    if (opts.restarts == 0) throw PreconditionError("cotype_search: restarts must be >= 1");
    if (opts.initial && opts.initial->size() != tor.cells)
      throw PreconditionError("cotype_search: initial table has the wrong size");
    std::vector<RestartResult> runs(opts.restarts);
    parallel_chunks<int>(opts.restarts, [&](std::size_t b, std::size_t e) {
      for (std::size_t r = b; r < e; ++r) {
        std::vector<Index> f(tor.cells);
        if (r == 0 && opts.initial) {
          f = *opts.initial;
          for (Index v : f) target->check_index(v);
        } else {
          Rng rng(opts.seed + 0x9e3779b97f4a7c15ULL * (r + 1));
          std::uniform_int_distribution<Index> pick(0, t - 1);
          for (auto& v : f) v = pick(rng);
        }
        runs[r] = hill_climb(tor, dq, q, std::move(f), opts.max_steps);
      }
      return 0;
    }, 1);
    res.restarts = opts.restarts;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      res.evaluated += runs[r].evaluated;
      res.steps += runs[r].steps;
      if (r == 0 || runs[r].ratio > res.best_ratio) {
        res.best_ratio = runs[r].ratio;
        res.best_f = runs[r].f;
        res.best_restart = r;
      }
    }
  }
  res.constant_lower_bound = std::pow(res.best_ratio, 1.0 / q);
  return res;
}

EnfloSides enflo_sides(const EnfloInstance& inst, std::uint64_t enumeration_budget) {
  if (inst.n < 1 || inst.n > 40) throw PreconditionError("enflo: n must be in [1, 40]");
  if (!(inst.p >= 1)) throw PreconditionError("enflo: p must be >= 1");
  if (!inst.target || inst.target->empty()) throw PreconditionError("enflo: empty target");
  const std::uint64_t cube = 1ULL << inst.n;
  if (cube * static_cast<std::uint64_t>(inst.n) > enumeration_budget) throw PreconditionError("enflo: 2^n over budget");
  if (inst.f.size() != cube)
    throw PreconditionError("enflo: f has " + std::to_string(inst.f.size()) + " entries, expected 2^n");
  for (Index v : inst.f) inst.target->check_index(v);
  const PowerTable dq(*inst.target, inst.p);
  double lhs = 0, rhs = 0;
  for (std::uint64_t e = 0; e < cube; ++e) {
    lhs += dq(inst.f[e], inst.f[e ^ (cube - 1)]);
    for (int j = 0; j < inst.n; ++j) rhs += dq(inst.f[e], inst.f[e ^ (1ULL << j)]);
  }
  EnfloSides out;
  const double scale = std::pow(dq.unit, inst.p);
  out.lhs = lhs / static_cast<double>(cube) * scale;
  out.rhs_sum = rhs / static_cast<double>(cube) * scale;
  out.ratio = rhs > 0 ? lhs / rhs : 0.0;
  out.type_lower_bound = std::pow(out.ratio, 1.0 / inst.p);
  return out;
}

std::vector<ScanRow> min_m_scan(const std::vector<int>& n_values, double q, std::shared_ptr<const PointSpace> target,
                                double c_target, std::vector<int> m_candidates, const SearchOptions& opts) {
  if (m_candidates.empty()) throw PreconditionError("min_m_scan: empty candidate list");
  if (!(c_target > 0)) throw PreconditionError("min_m_scan: C must be positive");
  for (int m : m_candidates)
    if (m < 2 || m % 2 != 0) throw PreconditionError("min_m_scan: candidates must be even and >= 2");
  std::sort(m_candidates.begin(), m_candidates.end());
  m_candidates.erase(std::unique(m_candidates.begin(), m_candidates.end()), m_candidates.end());
  const double bound = std::pow(c_target, q);
  std::vector<ScanRow> rows;
  for (int n : n_values) {
    ScanRow row;
    row.n = n;
    row.floor = std::pow(static_cast<double>(n), 1.0 / q) / c_target;
    for (int m : m_candidates) {
      const auto res = cotype_search(n, m, q, target, opts);
      row.ratios.emplace_back(m, res.best_ratio);
      if (res.best_ratio <= bound * (1.0 + 1e-12)) {
        row.minimal_m = m;
        break;
      }
    }
    row.status = row.minimal_m ? "ok" : "open";
    rows.push_back(std::move(row));
  }
  return rows;
}

CotypeInstance read_cotype_instance(std::istream& in, std::shared_ptr<const PointSpace> target) {
  if (!target) throw PreconditionError("cotype instance needs a target space");
  CotypeInstance inst;
  inst.target = target;
  std::optional<int> n, m;
  std::optional<double> q;
  std::vector<std::pair<std::size_t, Index>> rows;
  std::string line;
  bool header_allowed = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(1, eq - 1), val = line.substr(eq + 1);
      if (key == "n") n = static_cast<int>(parse_double(val));
      else if (key == "m") m = static_cast<int>(parse_double(val));
      else if (key == "q") q = parse_double(val);
      continue;
    }
    if (!n || !m || !q) throw ParseError("cotype instance: #n, #m and #q must precede the rows");
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cells.push_back(tok);
    if (cells.size() != static_cast<std::size_t>(*n) + 1)
      throw ParseError("cotype instance line " + std::to_string(line_no) + ": expected n + 1 cells");
    std::size_t idx = 0, pw = 1;
    try {
      for (int k = 0; k < *n; ++k) {
        const double x = parse_double(cells[static_cast<std::size_t>(k)]);
        if (x < 0 || x >= *m || x != std::floor(x))
          throw ParseError("cotype instance line " + std::to_string(line_no) + ": coordinate out of Z_m");
        idx += static_cast<std::size_t>(x) * pw;
        pw *= static_cast<std::size_t>(*m);
      }
    } catch (const ParseError&) {
      if (header_allowed && rows.empty()) {
        header_allowed = false;
        continue;
      }
      throw;
    }
    header_allowed = false;
    rows.emplace_back(idx, target->index_of(cells.back()));
  }
  if (!n || !m || !q) throw ParseError("cotype instance: missing #n, #m or #q");
  inst.n = *n;
  inst.m = *m;
  inst.q = *q;
  check_params(inst.n, inst.m, inst.q);
  const std::size_t cells = inst.cells();
  std::vector<std::optional<Index>> table(cells);
  for (auto [idx, v] : rows) {
    if (table[idx]) throw ParseError("cotype instance: argument listed twice");
    table[idx] = v;
  }
  for (std::size_t x = 0; x < cells; ++x) {
    if (!table[x]) throw PreconditionError("cotype instance: f is not total (missing argument " + std::to_string(x) + ")");
    inst.f.push_back(*table[x]);
  }
  return inst;
}

void write_cotype_instance(std::ostream& out, const CotypeInstance& inst) {
  inst.validate();
  out << "#n=" << inst.n << "\n#m=" << inst.m << "\n#q=" << format_double(inst.q) << "\n";
  for (int k = 1; k <= inst.n; ++k) out << "x" << k << ",";
  out << "target_id\n";
  for (std::size_t x = 0; x < inst.cells(); ++x) {
    std::size_t r = x;
    for (int k = 0; k < inst.n; ++k) {
      out << r % static_cast<std::size_t>(inst.m) << ",";
      r /= static_cast<std::size_t>(inst.m);
    }
    out << inst.target->label(inst.f[x]) << "\n";
  }
}

void write_scan_csv(std::ostream& out, const std::vector<ScanRow>& rows) {
  out << "n,minimal_m,floor,status\n";
  for (const auto& r : rows)
    out << r.n << "," << (r.minimal_m ? std::to_string(*r.minimal_m) : std::string()) << "," << format_double(r.floor)
        << "," << r.status << "\n";
}

}  // namespace mobius

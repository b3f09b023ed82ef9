#include "mobius/point_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mobius/error.hpp"

namespace mobius {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lp_distance(const std::vector<double>& a, const std::vector<double>& b, double p) {
  if (a.size() != b.size()) throw PreconditionError("coordinate dimension mismatch");
  if (a.size() == 1) return std::abs(a[0] - b[0]);
  if (std::isinf(p)) {
    double m = 0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
  }
  if (p == 2.0) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
  }
  if (p == 1.0) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
    return s;
  }
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::pow(std::abs(a[k] - b[k]), p);
  return std::pow(s, 1.0 / p);
}

}  // namespace

const char* to_string(KStatus s) {
  switch (s) {
    case KStatus::exact: return "exact";
    case KStatus::declared: return "declared";
    case KStatus::estimated: return "estimated";
  }
  return "?";
}

PointSpace::PointSpace(std::vector<std::string> labels)
    : labels_(std::move(labels)), table_(labels_.size() * labels_.size(), 0.0) {}

PointSpace PointSpace::from_table(std::vector<std::string> labels, std::vector<double> table) {
  if (table.size() != labels.size() * labels.size())
    throw PreconditionError("distance table size does not match the number of labels");
  PointSpace s(std::move(labels));
  s.table_ = std::move(table);
  return s;
}

PointSpace PointSpace::from_coords(std::vector<std::string> labels,
                                   std::vector<std::vector<double>> coords, double p) {
  if (coords.size() != labels.size()) throw PreconditionError("one coordinate vector per label");
  if (!(p >= 1.0)) throw PreconditionError("l_p exponent must be >= 1");
  PointSpace s;
  s.labels_ = std::move(labels);
  s.coords_ = std::move(coords);
  s.p_ = p;
  return s;
}

double PointSpace::distance(Index a, Index b) const {
  if (a == b) return table_.empty() ? 0.0 : table_[a * size() + a];
  if (!table_.empty()) return table_[a * size() + b];
  if (infinity_ && (a == *infinity_ || b == *infinity_)) return kInf;
  return lp_distance(coords_[a], coords_[b], p_);
}

void PointSpace::set_distance(Index a, Index b, ExtReal d) {
  if (table_.empty() && !labels_.empty())
    throw PreconditionError("set_distance requires a dense space; call materialized() first");
  check_index(a);
  check_index(b);
  table_[a * size() + b] = d.value();
  table_[b * size() + a] = d.value();
}

std::optional<Index> PointSpace::find(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<Index>(it - labels_.begin());
}

Index PointSpace::index_of(std::string_view label) const {
  auto i = find(label);
  if (!i) throw PreconditionError("unknown point id '" + std::string(label) + "'");
  return *i;
}

void PointSpace::check_index(Index i) const {
  if (i >= size()) throw PreconditionError("point index " + std::to_string(i) + " out of range");
}

void PointSpace::set_infinity_point(std::optional<Index> i) {
  if (i) check_index(*i);
  infinity_ = i;
}

void PointSpace::set_origin(std::optional<Index> i) {
  if (i) {
    check_index(*i);
    if (is_infinity(*i)) throw PreconditionError("the origin must be a finite point");
  }
  origin_ = i;
}

Index PointSpace::add_infinity_point(std::string label) {
  if (infinity_) throw PreconditionError("space already has a point at infinity");
  if (find(label)) throw PreconditionError("duplicate point id '" + label + "'");
  const std::size_t n = size();
  if (!table_.empty() || n == 0) {
    std::vector<double> t((n + 1) * (n + 1), kInf);
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(table_.begin() + static_cast<std::ptrdiff_t>(i * n), n,
                  t.begin() + static_cast<std::ptrdiff_t>(i * (n + 1)));
    t[n * (n + 1) + n] = 0.0;
    table_ = std::move(t);
  } else {
    coords_.emplace_back();
  }
  labels_.push_back(std::move(label));
  infinity_ = n;
  return n;
}

void PointSpace::set_quasimetric_k(std::optional<double> k, KStatus status) {
  if (k && !(*k >= 1.0)) throw PreconditionError("quasimetric K must be >= 1");
  if (!k && status != KStatus::exact) throw PreconditionError("K status requires a value");
  k_ = k;
  k_status_ = k ? status : KStatus::exact;
}

PointSpace PointSpace::materialized() const {
  if (!table_.empty() || labels_.empty()) return *this;
  PointSpace out(labels_);
  const std::size_t n = size();
  for (Index a = 0; a < n; ++a)
    for (Index b = a + 1; b < n; ++b) {
      const double d = distance(a, b);
      out.table_[a * n + b] = d;
      out.table_[b * n + a] = d;
    }
  out.infinity_ = infinity_;
  out.origin_ = origin_;
  out.k_ = k_;
  out.k_status_ = k_status_;
  out.metadata_ = metadata_;
  return out;
}

double PointSpace::max_finite_distance() const {
  double m = 0;
  for (Index a = 0; a < size(); ++a)
    for (Index b = a + 1; b < size(); ++b) {
      const double d = distance(a, b);
      if (std::isfinite(d)) m = std::max(m, d);
    }
  return m;
}

double PointSpace::norm(Index i) const {
  if (!origin_) throw PreconditionError("space has no origin");
  return distance(*origin_, i);
}

PointSpace subspace(const PointSpace& space, const std::vector<Index>& ids) {
  std::vector<std::string> labels;
  labels.reserve(ids.size());
  for (Index i : ids) {
    space.check_index(i);
    labels.push_back(space.label(i));
  }
  PointSpace out(std::move(labels));
  for (Index a = 0; a < ids.size(); ++a) {
    if (space.origin() == ids[a]) out.set_origin(a);
    if (space.is_infinity(ids[a])) out.set_infinity_point(a);
    for (Index b = a + 1; b < ids.size(); ++b) out.set_distance(a, b, space.dist(ids[a], ids[b]));
  }
  out.set_quasimetric_k(space.quasimetric_k(), space.k_status());
  return out;
}

Quadruple Quadruple::make(Index x, Index y, Index z, Index w) {
  if (x == w) throw PreconditionError("cross-ratio quadruple requires x != w");
  if (y == z) throw PreconditionError("cross-ratio quadruple requires y != z");
  return Quadruple{x, y, z, w};
}

std::optional<ExtReal> cross_ratio(const PointSpace& space, const Quadruple& q) {
  if (q.x == q.w || q.y == q.z) throw PreconditionError("invalid quadruple (x == w or y == z)");
  for (Index i : {q.x, q.y, q.z, q.w}) space.check_index(i);
  if (q.x == q.z || q.y == q.w) return ExtReal(0.0);

  // Surviving factors; each one is a distance between two non-infinite points.
  struct Side {
    double finite_product = 1.0;
    bool zero = false;
    bool inf = false;
  };
  auto factor = [&](Side& side, Index a, Index b) {
    if (space.is_infinity(a) || space.is_infinity(b)) return;
    const double d = space.distance(a, b);
    if (d == 0.0) side.zero = true;
    else if (std::isinf(d)) side.inf = true;
    else side.finite_product *= d;
  };
  Side num, den;
  factor(num, q.x, q.z);
  factor(num, q.y, q.w);
  factor(den, q.x, q.w);
  factor(den, q.y, q.z);

  if ((num.zero && num.inf) || (den.zero && den.inf)) return std::nullopt;
  const bool num0 = num.zero, numI = num.inf, den0 = den.zero, denI = den.inf;
  if ((num0 && den0) || (numI && denI)) return std::nullopt;
  if (num0 || denI) return ExtReal(0.0);
  if (numI || den0) return ExtReal::inf();
  return ExtReal(num.finite_product / den.finite_product);
}

const char* to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::nonzero_diagonal: return "nonzero_diagonal";
    case Violation::Kind::asymmetric: return "asymmetric";
    case Violation::Kind::zero_off_diagonal: return "zero_off_diagonal";
    case Violation::Kind::infinite_finite_pair: return "infinite_finite_pair";
    case Violation::Kind::finite_distance_to_infinity: return "finite_distance_to_infinity";
    case Violation::Kind::triangle: return "triangle";
    case Violation::Kind::quasimetric_bound: return "quasimetric_bound";
  }
  return "?";
}

std::string Violation::describe(const PointSpace& space) const {
  std::ostringstream os;
  os << to_string(kind) << ": ";
  switch (kind) {
    case Kind::nonzero_diagonal:
      os << "d(" << space.label(a) << "," << space.label(a) << ") = " << lhs;
      break;
    case Kind::triangle:
      os << "d(" << space.label(a) << "," << space.label(c) << ") = " << lhs << " > d("
         << space.label(a) << "," << space.label(b) << ") + d(" << space.label(b) << ","
         << space.label(c) << ") = " << rhs;
      break;
    case Kind::quasimetric_bound:
      os << "d/K^2 = " << lhs << " > smoothed " << rhs << " for (" << space.label(a) << ","
         << space.label(b) << ")";
      break;
    default:
      os << "(" << space.label(a) << "," << space.label(b) << ") values " << lhs << ", " << rhs;
  }
  return os.str();
}

MetricReport verify_extended_metric(const PointSpace& space) {
  MetricReport rep;
  const std::size_t n = space.size();
  const double tol = kAxiomTolerance * std::max(1.0, space.max_finite_distance());
  auto add = [&](Violation v) {
    rep.ok = false;
    rep.violations.push_back(v);
  };
  using K = Violation::Kind;

  for (Index a = 0; a < n; ++a) {
    const double daa = space.distance(a, a);
    if (std::abs(daa) > tol) add({K::nonzero_diagonal, a, a, a, daa, 0.0});
    for (Index b = a + 1; b < n; ++b) {
      const double dab = space.distance(a, b), dba = space.distance(b, a);
      const bool inf_pair = space.is_infinity(a) || space.is_infinity(b);
      if (std::isinf(dab) != std::isinf(dba) ||
          (std::isfinite(dab) && std::abs(dab - dba) > tol))
        add({K::asymmetric, a, b, b, dab, dba});
      if (inf_pair) {
        if (!std::isinf(dab)) add({K::finite_distance_to_infinity, a, b, b, dab, 0.0});
        continue;
      }
      if (std::isinf(dab)) add({K::infinite_finite_pair, a, b, b, dab, 0.0});
      else if (dab <= 0.0) add({K::zero_off_diagonal, a, b, b, dab, 0.0});
    }
  }
  if (!rep.ok) return rep;

  if (!space.quasimetric_k()) {
    for (Index a = 0; a < n; ++a) {
      if (space.is_infinity(a)) continue;
      for (Index c = a + 1; c < n; ++c) {
        if (space.is_infinity(c)) continue;
        const double dac = space.distance(a, c);
        for (Index b = 0; b < n; ++b) {
          if (b == a || b == c || space.is_infinity(b)) continue;
          const double via = space.distance(a, b) + space.distance(b, c);
          if (dac > via + tol) add({K::triangle, a, b, c, dac, via});
        }
      }
    }
  } else {
    const double k2 = *space.quasimetric_k() * *space.quasimetric_k();
    const PointSpace smooth = chain_smooth(space);
    for (Index a = 0; a < n; ++a)
      for (Index b = a + 1; b < n; ++b) {
        if (space.is_infinity(a) || space.is_infinity(b)) continue;
        const double lower = space.distance(a, b) / k2;
        if (lower > smooth.distance(a, b) + tol) add({K::quasimetric_bound, a, b, b, lower, smooth.distance(a, b)});
      }
  }
  return rep;
}

PointSpace chain_smooth(const PointSpace& space) {
  const std::size_t n = space.size();
  PointSpace out = space.materialized();
  std::vector<Index> finite;
  for (Index i = 0; i < n; ++i)
    if (!space.is_infinity(i)) finite.push_back(i);
  const std::size_t m = finite.size();
  std::vector<double> d(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double v = space.distance(finite[i], finite[j]);
      if (std::isinf(v)) throw PreconditionError("chain_smooth: INF distance between finite points");
      d[i * m + j] = v;
    }
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t i = 0; i < m; ++i) {
      const double dik = d[i * m + k];
      for (std::size_t j = 0; j < m; ++j)
        if (dik + d[k * m + j] < d[i * m + j]) d[i * m + j] = dik + d[k * m + j];
    }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) out.set_distance(finite[i], finite[j], d[i * m + j]);
  out.set_quasimetric_k(std::nullopt, KStatus::exact);
  return out;
}

PointSpace snowflake(const PointSpace& space, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw PreconditionError("snowflake exponent must lie in (0, 1]");
  PointSpace out = space.materialized();
  if (alpha == 1.0) return out;
  for (Index a = 0; a < space.size(); ++a)
    for (Index b = a + 1; b < space.size(); ++b) {
      const double d = space.distance(a, b);
      out.set_distance(a, b, std::isinf(d) ? d : std::pow(d, alpha));
    }
  if (out.quasimetric_k()) out.set_quasimetric_k(std::pow(*out.quasimetric_k(), alpha), out.k_status());
  return out;
}

QuasimetricEstimate estimate_quasimetric_k(const PointSpace& space) {
  const PointSpace smooth = chain_smooth(space);
  QuasimetricEstimate est;
  for (Index a = 0; a < space.size(); ++a)
    for (Index b = a + 1; b < space.size(); ++b) {
      if (space.is_infinity(a) || space.is_infinity(b)) continue;
      const double s = smooth.distance(a, b);
      if (s > 0) est.observed_ratio = std::max(est.observed_ratio, space.distance(a, b) / s);
    }
  est.k = std::sqrt(est.observed_ratio);
  return est;
}

void attach_estimated_k(PointSpace& space) {
  space.set_quasimetric_k(estimate_quasimetric_k(space).k, KStatus::estimated);
}

}  // namespace mobius

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mobius/ext_real.hpp"

namespace mobius {

using Index = std::size_t;

/// How the relaxation constant of a space is known.
enum class KStatus {
  exact,      ///< no K: the finite part is a metric
  declared,   ///< K supplied by the user (file header or constructor)
  estimated,  ///< K computed by `estimate_quasimetric_k`
};

const char* to_string(KStatus s);

/// Finite point set with a symmetric distance over [0, INF].
///
/// Distances are either stored in a dense row-major table or computed on
/// demand from per-point coordinates with an l_p norm (p = INF for l_inf).
/// Coordinate-backed spaces are what makes 10^4..10^5 point lines cheap. At
/// most one point is the point at infinity; it is at distance INF from every
/// other point.
class PointSpace {
 public:
  PointSpace() = default;

  /// Dense space with all distances zero; fill with `set_distance`.
  explicit PointSpace(std::vector<std::string> labels);

  static PointSpace from_table(std::vector<std::string> labels, std::vector<double> table);
  static PointSpace from_coords(std::vector<std::string> labels,
                                std::vector<std::vector<double>> coords, double p = 2.0);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  ExtReal dist(Index a, Index b) const { return ExtReal(distance(a, b)); }
  /// Same as `dist` as a plain double (+infinity for INF).
  double distance(Index a, Index b) const;

  void set_distance(Index a, Index b, ExtReal d);

  const std::string& label(Index i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<Index> find(std::string_view label) const;
  /// Like `find`, but throws PreconditionError for unknown labels.
  Index index_of(std::string_view label) const;
  void check_index(Index i) const;

  std::optional<Index> infinity_point() const { return infinity_; }
  std::optional<Index> origin() const { return origin_; }
  bool is_infinity(Index i) const { return infinity_ && *infinity_ == i; }

  /// Declares `i` as the point at infinity. Distances are not touched; the
  /// dense table must already carry INF in row `i` (checked by
  /// `verify_extended_metric`).
  void set_infinity_point(std::optional<Index> i);
  void set_origin(std::optional<Index> i);

  /// Appends a new point at infinity and returns its index.
  Index add_infinity_point(std::string label = "inf");

  std::optional<double> quasimetric_k() const { return k_; }
  KStatus k_status() const { return k_status_; }
  void set_quasimetric_k(std::optional<double> k, KStatus status);

  bool has_coords() const { return table_.empty() && !labels_.empty(); }
  const std::vector<double>& coords(Index i) const { return coords_.at(i); }
  double lp_exponent() const { return p_; }

  std::map<std::string, std::string>& metadata() { return metadata_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  /// Dense copy of this space (identity for dense spaces).
  PointSpace materialized() const;
  /// Largest finite distance between two points (0 for spaces of size < 2).
  double max_finite_distance() const;
  /// Distance to the origin; requires an origin.
  double norm(Index i) const;

 private:
  std::vector<std::string> labels_;
  std::vector<double> table_;
  std::vector<std::vector<double>> coords_;
  double p_ = 2.0;
  std::optional<Index> infinity_;
  std::optional<Index> origin_;
  std::optional<double> k_;
  KStatus k_status_ = KStatus::exact;
  std::map<std::string, std::string> metadata_;
};

/// Dense space on the given points (in the given order). Origin and point at
/// infinity carry over when they are among `ids`; K carries over as well.
PointSpace subspace(const PointSpace& space, const std::vector<Index>& ids);

/// Ordered quadruple (x, y, z, w) with x != w and y != z.
struct Quadruple {
  Index x = 0, y = 0, z = 0, w = 1;

  /// Throws PreconditionError on x == w or y == z.
  static Quadruple make(Index x, Index y, Index z, Index w);

  friend auto operator<=>(const Quadruple&, const Quadruple&) = default;
};

/// Cross-ratio d(x,z)d(y,w) / (d(x,w)d(y,z)).
///
/// Returns 0 when x == z or y == w, drops every factor that contains the point
/// at infinity, and returns nullopt ("indeterminate") when the surviving
/// factors mix 0 with INF (0/0, INF/INF, 0*INF).
std::optional<ExtReal> cross_ratio(const PointSpace& space, const Quadruple& q);

struct Violation {
  enum class Kind {
    nonzero_diagonal,
    asymmetric,
    zero_off_diagonal,
    infinite_finite_pair,
    finite_distance_to_infinity,
    triangle,
    quasimetric_bound,
  };
  Kind kind;
  Index a = 0, b = 0, c = 0;
  double lhs = 0, rhs = 0;

  std::string describe(const PointSpace& space) const;
};

const char* to_string(Violation::Kind k);

struct MetricReport {
  bool ok = true;
  std::vector<Violation> violations;
};

/// Relative tolerance of all axiom checks (scaled by the largest finite entry).
inline constexpr double kAxiomTolerance = 1e-12;

/// Checks the extended-metric axioms. Triangle inequalities are checked only
/// when no K is attached; with a K the bound d/K^2 <= chain_smooth(d) is
/// checked instead.
MetricReport verify_extended_metric(const PointSpace& space);

/// All-pairs shortest paths over the finite part. The point at infinity (if
/// any) keeps its INF row. The result is an exact metric (K cleared).
PointSpace chain_smooth(const PointSpace& space);

/// Replaces every distance by d^alpha, 0 < alpha <= 1.
PointSpace snowflake(const PointSpace& space, double alpha);

struct QuasimetricEstimate {
  double observed_ratio = 1.0;  ///< max d / chain_smooth(d) over finite pairs
  double k = 1.0;               ///< sqrt(observed_ratio); d/k^2 <= d_hat holds
};

QuasimetricEstimate estimate_quasimetric_k(const PointSpace& space);

/// Attaches a freshly estimated K with status `estimated`.
void attach_estimated_k(PointSpace& space);

}  // namespace mobius

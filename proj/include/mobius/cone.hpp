#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mobius/am.hpp"
#include "mobius/gauge.hpp"
#include "mobius/point_space.hpp"
#include "mobius/transforms.hpp"

namespace mobius {

/// Index -> point map n -> x_n in R^dim, either closed form (generators,
/// one-dimensional) or a table of recorded indices.
class Trajectory {
 public:
  enum class Kind { linear, affine_log, constant, table };

  /// x_n = a n + b
  static Trajectory linear(double a, double b);
  /// x_n = a n + b log n + c
  static Trajectory affine_log(double a, double b, double c);
  /// x_n = point for every n
  static Trajectory constant(std::vector<double> point);
  /// Rows (n, coordinates); indices must be strictly increasing and
  /// positive.
  static Trajectory table(std::vector<long long> n, std::vector<std::vector<double>> coords);

  /// `gen:linear(a,b)` | `gen:affine_log(a,b,c)` | `gen:constant(c1,...)` |
  /// a CSV path with rows `n,x1,...,xd` (header optional).
  static Trajectory parse(std::string_view spec, const std::filesystem::path& base_dir = {});

  Kind kind() const { return kind_; }
  std::size_t dim() const;
  std::vector<double> at(long long n) const;
  bool records(long long n) const;
  /// Recorded indices in [first, last]; every integer for generators.
  std::vector<long long> indices(long long first, long long last) const;
  std::string to_string() const;

 private:
  Kind kind_ = Kind::constant;
  double a_ = 0, b_ = 0, c_ = 0;
  std::vector<double> point_;
  std::vector<long long> n_;
  std::vector<std::vector<double>> rows_;
};

/// Scale sequence lambda_n -> infinity.
class ScaleSequence {
 public:
  enum class Kind { linear, power, geometric };
  static ScaleSequence linear(double a);              ///< a n
  static ScaleSequence power(double c, double beta);  ///< c n^beta
  static ScaleSequence geometric(double base);        ///< base^n
  /// `lambda:linear(a)` | `lambda:power(c,beta)` | `lambda:geometric(base)`
  static ScaleSequence parse(std::string_view spec);

  double operator()(long long n) const;
  std::string to_string() const;

 private:
  Kind kind_ = Kind::linear;
  double a_ = 1, b_ = 1;
};

enum class PanelMode { cone, tangent };

struct RescaledPanel {
  double lambda = 1;
  PanelMode mode = PanelMode::cone;
  std::vector<Index> sample;  ///< ids in the base space
  PointSpace panel;           ///< distances d/lambda (cone) or lambda d (tangent)
};

RescaledPanel rescaled_panel(const PointSpace& space, const std::vector<Index>& sample, double lambda,
                             PanelMode mode);

struct ConeIdentityReport {
  std::size_t entries = 0;
  double max_abs_error = 0;
  double max_rel_error = 0;
  /// Per identity: d_p(q,x)/l vs 1/(l d(p,x)); d_p(x,y)/l vs the rescaled
  /// quotient; l d^p(*,x) vs 1/((1+d(p,x))/l); l d^p(x,y) vs its formula.
  double cayley_point_error = 0;
  double cayley_pair_error = 0;
  double inverse_point_error = 0;
  double inverse_pair_error = 0;
};

/// Checks the per-index cone identities of the Cayley and inverse Cayley
/// transforms at `p` on the sampled points (x = p excluded). Needs a point at
/// infinity. Errors are relative to max(1, |expected|).
ConeIdentityReport cone_identity_check(const PointSpace& space, Index p, double lambda,
                                       const std::vector<Index>& sample);

struct SeparationReport {
  std::optional<long long> first_separated_index;  ///< separated on every later recorded index
  std::optional<long long> last_unseparated_index;
  double separated_fraction = 0;
  std::size_t indices = 0;
  std::size_t separated = 0;
  double min_cone_distance = 0;  ///< min d(x_n, y_n) / lambda_n
  double witness_bound_x = 0;    ///< max |x_n| / lambda_n
  double witness_bound_y = 0;
};

/// Evaluates d(x_n, y_n) > g(|x_n| + |y_n|) on every common recorded index in
/// [first, last], distances in l_p with the origin at 0.
SeparationReport eventual_separation(const Trajectory& x, const Trajectory& y, const ScaleSequence& lambda,
                                     const Gauge& g, long long first, long long last, double p = 2.0);

struct AnnulusWitness {
  enum class Status { already_separated, witness };
  Status status = Status::already_separated;
  std::optional<Index> w;
  double inner = 0;  ///< 2 u(4|y|)
  double outer = 0;  ///< inner + v(|y|)
  std::vector<Index> chain;  ///< v-chain from the origin to y
  std::vector<Index> hits;   ///< chain points in the annulus, in chain order
  bool separated_xw = false;
  bool separated_yw = false;
};

/// If x, y are not u-separated, walks a chain from the origin to y with
/// steps < v(|y|) and returns its first point w with
/// 2u(4|y|) < d(w,y) <= 2u(4|y|) + v(|y|). Throws PreconditionError
/// "precondition scale too small" or "annulus empty on sample".
AnnulusWitness annulus_witness(const PointSpace& space, Index x, Index y, const Gauge& u, const Gauge& v);

struct ScaleRealization {
  Index z = 0;
  double norm = 0;   ///< |z|
  double ratio = 0;  ///< lambda / |z|
  double bound = 0;  ///< 1 - v(|z|)/|z|
  double epsilon = 0;
  bool bound_asserted = false;  ///< a chainedness certificate was supplied and positive
  bool bound_holds = false;     ///< bound - epsilon/|z| <= ratio <= 1
  std::string warning;
};

/// The point of least norm among finite points with |z| >= lambda (an
/// epsilon-minimal choice for every epsilon >= 0). `chained` is the outcome
/// of a chainedness check at v, if one was run.
ScaleRealization scale_realization(const PointSpace& space, double lambda, const Gauge& v, double epsilon,
                                   std::optional<bool> chained = std::nullopt);

struct QsOptions {
  double window = 2.0;   ///< sample points with |x| <= window * lambda
  double min_panel = 0.1;  ///< d(x,y), d(x,w) >= min_panel * lambda
  std::size_t attempts_per_sample = 50;
  EnvelopeOptions envelope;
};

struct ScaleEnvelope {
  double lambda = 0;
  std::size_t candidates = 0;
  std::size_t degenerate = 0;
  /// (s, t) = (d(x,y)/d(x,w), d(fx,fy)/d(fx,fw)); quadruple holds (x, y, w, x).
  ModulusEnvelope envelope;
};

struct QsReport {
  std::vector<ScaleEnvelope> scales;
  /// sup |eta_k - eta_{k+1}| on the common s-range, eta_k interpolated
  /// linearly between the majorant's breakpoints; NaN without overlap.
  std::vector<double> drift;
  bool drift_decreasing = false;
};

/// Three-point ratios of a map on g-separated triples at each scale.
QsReport induced_qs_check(const PointMap& map, const Gauge& g, const std::vector<double>& scales,
                          std::size_t sample_budget, std::uint64_t seed = 0, const QsOptions& opts = {});

/// Linear interpolation of the majorant breakpoints (flat past the last one,
/// 0 before the first).
double interpolated_envelope(const ModulusEnvelope& env, double s);

}  // namespace mobius

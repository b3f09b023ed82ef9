#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mobius/gauge.hpp"
#include "mobius/point_space.hpp"
#include "mobius/transforms.hpp"

namespace mobius {

/// d(x,y) > g(|x| + |y|), |.| the distance to the origin. Every point is
/// separated from the point at infinity.
bool is_separated(const PointSpace& space, const Gauge& g, Index x, Index y);

struct EnvelopeSample {
  double s = 0;  ///< source cross-ratio
  double t = 0;  ///< image cross-ratio
  Quadruple quadruple;
};

struct EnvelopeOptions {
  /// A sample with s <= small_source and t >= large_image is evidence that no
  /// modulus vanishing at 0 bounds the map.
  double small_source = 1e-2;
  double large_image = 0.5;
  /// Tolerance for the "t <= eta(s)" comparison of `bounds`.
  double tolerance = 1e-12;
  /// Random draws per requested sample before giving up.
  std::size_t attempts_per_sample = 50;
};

struct PowerFit {
  double slope = 0;
  double offset = 0;        ///< log t ~ slope * log s + offset
  double max_residual = 0;  ///< max |log t - slope log s - offset|
};

/// Empirical modulus of a map: sampled (s, t) pairs and their least monotone
/// majorant eta(s) = max{t_i : s_i <= s}.
class ModulusEnvelope {
 public:
  ModulusEnvelope() = default;
  ModulusEnvelope(std::vector<EnvelopeSample> samples, const EnvelopeOptions& opts);

  const std::vector<EnvelopeSample>& samples() const { return samples_; }
  const std::vector<EnvelopeSample>& violations() const { return violations_; }
  bool vanishes_at_zero() const { return violations_.empty(); }

  /// Breakpoints (s, eta(s)) of the majorant, s strictly increasing.
  const std::vector<std::pair<double, double>>& steps() const { return steps_; }

  /// eta(s); 0 below the smallest sample, extended by the last value.
  double operator()(double s) const;
  /// True when every sample satisfies t <= eta(s) (always, by construction)
  /// and the majorant is nondecreasing.
  bool is_consistent() const;

  /// Least-squares fit of log t against log s over samples with t > 0.
  PowerFit fit_power_law() const;
  /// max |t - s^alpha| / max(1, s^alpha) over the samples.
  double max_power_deviation(double alpha) const;

  std::size_t degenerate = 0;  ///< sampled quadruples with undefined image CR

 private:
  std::vector<EnvelopeSample> samples_;
  std::vector<EnvelopeSample> violations_;
  std::vector<std::pair<double, double>> steps_;
};

/// Samples quadruples of source points that are pairwise separated by `g`
/// and records (source CR, image CR). Requires an origin and a point at
/// infinity in the source. Throws PreconditionError when no separated
/// quadruple is found.
ModulusEnvelope am_envelope(const PointMap& map, const Gauge& g, std::size_t sample_budget,
                            std::uint64_t seed = 0, const EnvelopeOptions& opts = {});

struct ChainReport {
  bool chained = true;
  /// Pair with the largest (bottleneck step) / v(|x| + |y|).
  Index worst_x = 0, worst_y = 0;
  double worst_ratio = 0;
  double worst_bottleneck = 0;
  double worst_threshold = 0;
  std::size_t failing_pairs = 0;
  std::size_t pairs = 0;
  /// Minimax chains: the worst pair first, then up to a few failing pairs.
  std::vector<std::vector<Index>> witness_chains;
};

/// Decides for every pair of finite points whether a chain with all steps
/// < v(|x| + |y|) exists. The best possible largest step of a chain between
/// x and y is the bottleneck weight on the minimum spanning tree path, which
/// is computed exactly for all pairs.
ChainReport check_asymptotically_chained(const PointSpace& space, const Gauge& v,
                                         std::size_t max_witnesses = 4);

/// Constants of a sublinear bi-Lipschitz embedding:
/// c' d - C' u(|x|+|y|) <= d(f x, f y) <= c d + C u(|x|+|y|).
struct SbeConstants {
  double c = 1, C = 1, c_prime = 1, C_prime = 1;
  Gauge u = Gauge::log(1, 1);
};

struct AmConstants {
  Gauge v;
  double D = 1;
  double upper_factor = 1;  ///< d(f x, f y) <= upper_factor d on v-separated pairs
  double lower_factor = 1;  ///< d(f x, f y) >= lower_factor d on v-separated pairs
  bool bilipschitz_all_scales = false;
};

/// v = 2 (C'/c') u and D = max(c + C c'/(2 C'), 2/c'). With C' = 0 the lower
/// bound holds at all scales; with C = C' = 0 the map is bi-Lipschitz with
/// D = max(c, 1/c').
AmConstants sbe_to_am(const SbeConstants& k);

struct SyntheticSbe {
  PointMap map;
  SbeConstants constants;
};

/// f(x) = a R x + b(x) on a coordinate space with an origin, R a rotation
/// (plane) or the identity, and |b(x)| <= (beta/2) u(|x|). The returned
/// constants c = c' = a, C = C' = beta satisfy the SBE bounds by
/// construction.
SyntheticSbe synthetic_sbe_map(const PointSpace& source, double a, double beta, const Gauge& u,
                               std::uint64_t seed);

}  // namespace mobius

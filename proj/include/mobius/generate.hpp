#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mobius/point_space.hpp"

namespace mobius {

struct GenerateOptions {
  bool with_infinity = false;
  std::size_t max_points = 20000;
};

/// Points start, start + step, ..., count of them, on the real line. The
/// point at coordinate 0 (if present) becomes the origin.
PointSpace real_line_grid(double start, double step, std::size_t count,
                          const GenerateOptions& opts = {});

/// Real-line points at arbitrary coordinates; origin = the point at 0 if any.
PointSpace real_line_points(const std::vector<double>& xs, const GenerateOptions& opts = {});

/// {0, ..., side-1}^dims with the l_p distance (p = INF for l_inf). Labels
/// are "i:j:k"; the all-zero point is the origin.
PointSpace lp_grid(double p, int dims, int side, const GenerateOptions& opts = {});

/// Arbitrary coordinates with the l_p distance; `origin` selects a point.
PointSpace coords_space(std::vector<std::vector<double>> coords, double p,
                        std::optional<Index> origin = std::nullopt,
                        const GenerateOptions& opts = {});

enum class WordGroup { zd, free, heisenberg };

struct WordMetricParams {
  WordGroup group = WordGroup::zd;
  int rank = 1;    ///< d for Z^d, number of free generators; ignored for heisenberg
  int radius = 3;
};

/// The full word-metric ball of the given radius around the identity,
/// found by breadth-first search on the Cayley graph with the standard
/// symmetric generating set. d(g, h) = |g^-1 h| whenever g^-1 h lies in the
/// ball; other pairs get the within-ball graph distance and are counted in
/// metadata "clipped_pairs". metadata "radius" records the radius; the
/// identity is the origin.
PointSpace word_metric_ball(const WordMetricParams& params, const GenerateOptions& opts = {});

/// Seeded Gaussian point cloud in R^dims (Euclidean), labels "p0", "p1", ...
PointSpace random_euclidean_space(std::size_t n, int dims, std::uint64_t seed,
                                  const GenerateOptions& opts = {});

/// Seeded quasimetric: a random Euclidean metric with every distance scaled
/// by an independent factor in [1/K, K]. K is attached as declared.
PointSpace random_quasimetric(std::size_t n, int dims, double k, std::uint64_t seed);

}  // namespace mobius

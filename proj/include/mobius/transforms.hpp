#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "mobius/point_space.hpp"

namespace mobius {

/// Total map between two finite spaces, source index -> target index.
class PointMap {
 public:
  PointMap(PointSpace source, PointSpace target, std::vector<Index> assignment);

  /// Identity on labels: every source id is sent to the target point with
  /// the same id.
  static PointMap by_label(PointSpace source, PointSpace target);

  const PointSpace& source() const { return *source_; }
  const PointSpace& target() const { return *target_; }
  const std::vector<Index>& assignment() const { return assignment_; }
  Index operator()(Index i) const { return assignment_[i]; }

  bool is_bijective() const;
  /// Inverse map; requires a bijection.
  PointMap inverse() const;

 private:
  std::shared_ptr<const PointSpace> source_;
  std::shared_ptr<const PointSpace> target_;
  std::vector<Index> assignment_;
};

/// Two-column CSV `source_id,target_id` (an optional header line
/// `source_id,target_id` is skipped).
PointMap read_point_map_csv(std::istream& in, PointSpace source, PointSpace target);
void write_point_map_csv(const PointMap& map, std::ostream& out);

/// d_p(x,y) = d(x,y) / (d(x,p) d(p,y)); p becomes the point at infinity and
/// an existing point at infinity * becomes finite with d_p(x,*) = 1/d(x,p).
/// The result carries an estimated K.
PointSpace cayley_transform(const PointSpace& space, Index p);

/// d^q(x,y) = d(x,y) / ((1 + d(x,q))(1 + d(y,q))), d^q(x,*) = 1/(1 + d(x,q)).
/// The former point at infinity becomes an ordinary point; the result has
/// no point at infinity and carries an estimated K.
PointSpace inverse_cayley_transform(const PointSpace& space, Index q);

struct DefectReport {
  double defect = 0.0;
  std::optional<Quadruple> worst;
  std::size_t sampled = 0;
  std::size_t admissible = 0;
};

/// sup over sampled quadruples of |log [f x, f y, f z, f w] - log [x, y, z, w]|,
/// restricted to quadruples whose source and image cross-ratios are both
/// positive and finite. Ties go to the lexicographically smallest quadruple.
DefectReport moebius_defect(const PointMap& map, std::size_t sample_budget, std::uint64_t seed = 0);

}  // namespace mobius

#include "mobius/transforms.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "mobius/error.hpp"
#include "mobius/parallel.hpp"
#include "mobius/sampling.hpp"

namespace mobius {

PointMap::PointMap(PointSpace source, PointSpace target, std::vector<Index> assignment)
    : source_(std::make_shared<const PointSpace>(std::move(source))),
      target_(std::make_shared<const PointSpace>(std::move(target))),
      assignment_(std::move(assignment)) {
  if (assignment_.size() != source_->size())
    throw PreconditionError("point map must assign every source point exactly once");
  for (Index t : assignment_) target_->check_index(t);
}

PointMap PointMap::by_label(PointSpace source, PointSpace target) {
  std::vector<Index> a;
  a.reserve(source.size());
  for (const auto& l : source.labels()) a.push_back(target.index_of(l));
  return PointMap(std::move(source), std::move(target), std::move(a));
}

bool PointMap::is_bijective() const {
  if (source_->size() != target_->size()) return false;
  std::vector<bool> hit(target_->size(), false);
  for (Index t : assignment_) {
    if (hit[t]) return false;
    hit[t] = true;
  }
  return true;
}

PointMap PointMap::inverse() const {
  if (!is_bijective()) throw PreconditionError("inverse of a non-bijective point map");
  std::vector<Index> inv(assignment_.size());
  for (Index i = 0; i < assignment_.size(); ++i) inv[assignment_[i]] = i;
  return PointMap(*target_, *source_, std::move(inv));
}

PointMap read_point_map_csv(std::istream& in, PointSpace source, PointSpace target) {
  std::vector<std::optional<Index>> a(source.size());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || line == "source_id,target_id") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("point map row without comma: " + line);
    const Index s = source.index_of(line.substr(0, comma));
    const Index t = target.index_of(line.substr(comma + 1));
    if (a[s]) throw ParseError("point map assigns '" + source.label(s) + "' twice");
    a[s] = t;
  }
  std::vector<Index> out;
  for (Index i = 0; i < a.size(); ++i) {
    if (!a[i]) throw ParseError("point map does not assign '" + source.label(i) + "'");
    out.push_back(*a[i]);
  }
  return PointMap(std::move(source), std::move(target), std::move(out));
}

void write_point_map_csv(const PointMap& map, std::ostream& out) {
  out << "source_id,target_id\n";
  for (Index i = 0; i < map.assignment().size(); ++i)
    out << map.source().label(i) << ',' << map.target().label(map(i)) << '\n';
}

PointSpace cayley_transform(const PointSpace& space, Index p) {
  space.check_index(p);
  if (space.is_infinity(p)) throw PreconditionError("cayley_transform: p must be a finite point");
  const std::size_t n = space.size();
  PointSpace out(space.labels());
  out.metadata() = space.metadata();
  const auto star = space.infinity_point();
  for (Index x = 0; x < n; ++x) {
    for (Index y = x + 1; y < n; ++y) {
      if (x == p || y == p) {
        out.set_distance(x, y, ExtReal::inf());
      } else if (star && (x == *star || y == *star)) {
        const Index other = x == *star ? y : x;
        out.set_distance(x, y, space.dist(other, p).reciprocal());
      } else {
        out.set_distance(x, y, space.distance(x, y) / (space.distance(x, p) * space.distance(p, y)));
      }
    }
  }
  out.set_infinity_point(p);
  if (space.origin() && *space.origin() != p) out.set_origin(space.origin());
  attach_estimated_k(out);
  return out;
}

PointSpace inverse_cayley_transform(const PointSpace& space, Index q) {
  space.check_index(q);
  const auto star = space.infinity_point();
  if (!star) throw PreconditionError("inverse_cayley_transform: space has no point at infinity");
  if (*star == q) throw PreconditionError("inverse_cayley_transform: q must be a finite point");
  const std::size_t n = space.size();
  PointSpace out(space.labels());
  out.metadata() = space.metadata();
  for (Index x = 0; x < n; ++x)
    for (Index y = x + 1; y < n; ++y) {
      if (x == *star || y == *star) {
        const Index other = x == *star ? y : x;
        out.set_distance(x, y, 1.0 / (1.0 + space.distance(other, q)));
      } else {
        out.set_distance(x, y, space.distance(x, y) /
                                   ((1.0 + space.distance(x, q)) * (1.0 + space.distance(y, q))));
      }
    }
  out.set_origin(space.origin());
  attach_estimated_k(out);
  return out;
}

DefectReport moebius_defect(const PointMap& map, std::size_t sample_budget, std::uint64_t seed) {
  if (sample_budget < 1) throw PreconditionError("moebius_defect: sample budget must be >= 1");
  const auto quads = sample_quadruples(map.source().size(), sample_budget, seed);

  struct Partial {
    double defect = -1;
    Quadruple worst;
    std::size_t admissible = 0;
  };
  auto body = [&](std::size_t begin, std::size_t end) {
    Partial part;
    for (std::size_t k = begin; k < end; ++k) {
      const Quadruple& q = quads[k];
      const Quadruple img{map(q.x), map(q.y), map(q.z), map(q.w)};
      if (img.x == img.w || img.y == img.z) continue;
      const auto s = cross_ratio(map.source(), q);
      const auto t = cross_ratio(map.target(), img);
      if (!s || !t || s->is_zero() || s->is_inf() || t->is_zero() || t->is_inf()) continue;
      ++part.admissible;
      const double d = std::abs(std::log(t->value()) - std::log(s->value()));
      if (d > part.defect || (d == part.defect && q < part.worst)) {
        part.defect = d;
        part.worst = q;
      }
    }
    return part;
  };
  const auto parts = parallel_chunks<Partial>(quads.size(), body);

  DefectReport rep;
  rep.sampled = quads.size();
  Partial best;
  for (const auto& p : parts) {
    rep.admissible += p.admissible;
    if (p.admissible == 0) continue;
    if (p.defect > best.defect || (p.defect == best.defect && p.worst < best.worst)) {
      best.defect = p.defect;
      best.worst = p.worst;
    }
  }
  if (rep.admissible == 0) throw PreconditionError("moebius_defect: no admissible quadruple");
  rep.defect = best.defect;
  rep.worst = best.worst;
  return rep;
}

}  // namespace mobius

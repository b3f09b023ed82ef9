#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "mobius/point_space.hpp"

namespace mobius {

// Distance-matrix CSV:
//
//   #infinity=<id>        optional directives, any order, before the table
//   #origin=<id>
//   #K=<float>
//   ,id0,id1,...          header row; first cell ignored
//   id0,0,1.5,inf         one row per point, "inf" for INF
//
// Numbers are written in shortest round-trip form, so write -> read -> write
// is byte-identical.

PointSpace read_space_csv(std::istream& in);
PointSpace read_space_csv(const std::filesystem::path& path);
void write_space_csv(const PointSpace& space, std::ostream& out);
void write_space_csv(const PointSpace& space, const std::filesystem::path& path);

/// Shortest decimal string that parses back to exactly `v` ("inf" for +inf).
std::string format_double(double v);
double parse_double(std::string_view token);

}  // namespace mobius

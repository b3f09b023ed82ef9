#include "mobius/space_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mobius/error.hpp"

namespace mobius {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

std::string format_double(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token) {
  const std::string t = trim(token);
  if (t == "inf" || t == "INF" || t == "Inf") return std::numeric_limits<double>::infinity();
  double v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ParseError("not a number: '" + t + "'");
  return v;
}

PointSpace read_space_csv(std::istream& in) {
  std::string line;
  std::optional<std::string> inf_id, origin_id;
  std::optional<double> k;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const auto eq = t.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(std::string_view(t).substr(1, eq - 1));
      const std::string val = trim(std::string_view(t).substr(eq + 1));
      if (key == "infinity") inf_id = val;
      else if (key == "origin") origin_id = val;
      else if (key == "K") k = parse_double(val);
      continue;
    }
    header = split_csv(t);
    break;
  }
  if (header.size() < 2) throw ParseError("distance CSV: missing header row");
  std::vector<std::string> labels(header.begin() + 1, header.end());
  const std::size_t n = labels.size();
  std::vector<double> table(n * n, 0.0);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = split_csv(t);
    if (row >= n) throw ParseError("distance CSV: more rows than ids");
    if (cells.size() != n + 1) throw ParseError("distance CSV: row " + cells[0] + " has wrong width");
    if (cells[0] != labels[row]) throw ParseError("distance CSV: row id '" + cells[0] + "' does not match header");
    for (std::size_t j = 0; j < n; ++j) table[row * n + j] = parse_double(cells[j + 1]);
    ++row;
  }
  if (row != n) throw ParseError("distance CSV: expected " + std::to_string(n) + " rows");
  PointSpace s = PointSpace::from_table(std::move(labels), std::move(table));
  if (inf_id) s.set_infinity_point(s.index_of(*inf_id));
  if (origin_id) s.set_origin(s.index_of(*origin_id));
  if (k) s.set_quasimetric_k(*k, KStatus::declared);
  return s;
}

PointSpace read_space_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open space file " + path.string());
  return read_space_csv(in);
}

void write_space_csv(const PointSpace& space, std::ostream& out) {
  for (const auto& l : space.labels())
    if (l.find_first_of(",\n#") != std::string::npos)
      throw PreconditionError("point id '" + l + "' cannot be written to CSV");
  if (space.infinity_point()) out << "#infinity=" << space.label(*space.infinity_point()) << '\n';
  if (space.origin()) out << "#origin=" << space.label(*space.origin()) << '\n';
  if (space.quasimetric_k()) out << "#K=" << format_double(*space.quasimetric_k()) << '\n';
  for (const auto& l : space.labels()) out << ',' << l;
  out << '\n';
  for (Index i = 0; i < space.size(); ++i) {
    out << space.label(i);
    for (Index j = 0; j < space.size(); ++j) out << ',' << format_double(space.distance(i, j));
    out << '\n';
  }
}

void write_space_csv(const PointSpace& space, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_space_csv(space, out);
}

}  // namespace mobius

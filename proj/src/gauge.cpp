#include "mobius/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mobius/error.hpp"
#include "mobius/space_io.hpp"

namespace mobius {

Gauge Gauge::log(double c, double n0) {
  if (!(c >= 0) || !(n0 >= 1)) throw PreconditionError("log gauge needs c >= 0 and n0 >= 1");
  Gauge g;
  g.kind_ = Kind::log;
  g.a_ = c;
  g.b_ = n0;
  return g;
}

Gauge Gauge::power(double c, double beta) {
  if (!(c >= 0) || !(beta >= 0)) throw PreconditionError("power gauge needs c >= 0 and beta >= 0");
  Gauge g;
  g.kind_ = Kind::power;
  g.a_ = c;
  g.b_ = beta;
  return g;
}

Gauge Gauge::constant(double c) {
  if (!(c >= 0)) throw PreconditionError("constant gauge needs c >= 0");
  Gauge g;
  g.kind_ = Kind::constant;
  g.a_ = c;
  return g;
}

Gauge Gauge::table(std::vector<double> r, std::vector<double> u) {
  if (r.empty() || r.size() != u.size()) throw PreconditionError("table gauge needs matching nonempty columns");
  if (!std::is_sorted(r.begin(), r.end()) || std::adjacent_find(r.begin(), r.end()) != r.end())
    throw PreconditionError("table gauge abscissae must be strictly increasing");
  Gauge g;
  g.kind_ = Kind::table;
  g.rs_ = std::move(r);
  g.us_ = std::move(u);
  return g;
}

Gauge Gauge::parse(std::string_view spec, const std::filesystem::path& base_dir) {
  double factor = 1.0;
  if (const auto star = spec.find('*'); star != std::string_view::npos) {
    factor = parse_double(spec.substr(0, star));
    spec.remove_prefix(star + 1);
  }
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) throw ParseError("gauge spec '" + std::string(spec) + "' has no ':'");
  const std::string kind(spec.substr(0, colon));
  const std::string rest(spec.substr(colon + 1));
  auto numbers = [&](std::size_t expected) {
    std::vector<double> v;
    std::stringstream ss(rest);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(parse_double(tok));
    if (v.size() != expected) throw ParseError("gauge spec '" + std::string(spec) + "': wrong number of parameters");
    return v;
  };
  Gauge g;
  if (kind == "log") {
    auto v = numbers(2);
    g = log(v[0], v[1]);
  } else if (kind == "pow") {
    auto v = numbers(2);
    g = power(v[0], v[1]);
  } else if (kind == "const") {
    g = constant(numbers(1)[0]);
  } else if (kind == "table") {
    std::filesystem::path path(rest);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open gauge table " + path.string());
    std::vector<double> rs, us;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw ParseError("gauge table row without comma: " + line);
      try {
        const double r = parse_double(line.substr(0, comma));
        const double u = parse_double(line.substr(comma + 1));
        rs.push_back(r);
        us.push_back(u);
      } catch (const ParseError&) {
        if (!rs.empty()) throw;  // only a header line may be non-numeric
      }
    }
    g = table(std::move(rs), std::move(us));
    g.source_ = rest;
  } else {
    throw ParseError("unknown gauge kind '" + kind + "'");
  }
  return g.scaled(factor);
}

double Gauge::operator()(double r) const {
  double v = 0.0;
  switch (kind_) {
    case Kind::log: v = a_ * std::log(b_ + r); break;
    case Kind::power: v = a_ * std::pow(r, b_); break;
    case Kind::constant: v = a_; break;
    case Kind::table: {
      if (r <= rs_.front()) { v = us_.front(); break; }
      if (r >= rs_.back()) { v = us_.back(); break; }
      const auto hi = std::upper_bound(rs_.begin(), rs_.end(), r);
      const auto k = static_cast<std::size_t>(hi - rs_.begin());
      const double w = (r - rs_[k - 1]) / (rs_[k] - rs_[k - 1]);
      v = us_[k - 1] + w * (us_[k] - us_[k - 1]);
      break;
    }
  }
  return factor_ * v;
}

Gauge Gauge::scaled(double factor) const {
  if (!(factor >= 0)) throw PreconditionError("gauge scale factor must be >= 0");
  Gauge g = *this;
  g.factor_ *= factor;
  return g;
}

std::string Gauge::to_string() const {
  std::string base;
  switch (kind_) {
    case Kind::log: base = "log:" + format_double(a_) + "," + format_double(b_); break;
    case Kind::power: base = "pow:" + format_double(a_) + "," + format_double(b_); break;
    case Kind::constant: base = "const:" + format_double(a_); break;
    case Kind::table: base = "table:" + (source_.empty() ? std::string("<inline>") : source_); break;
  }
  return factor_ == 1.0 ? base : format_double(factor_) + "*" + base;
}

GaugeCertificate check_gauge(const Gauge& g, double r_max, double threshold) {
  if (!(r_max > 0)) throw PreconditionError("check_gauge: r_max must be positive");
  GaugeCertificate cert;
  cert.threshold = threshold;

  // Monotonicity on 0 plus a geometric grid spanning 12 decades below r_max.
  constexpr int kGrid = 600;
  double prev = g(0.0);
  if (prev < 0) cert.nonnegative = false;
  cert.nondecreasing_checked_up_to = 0.0;
  for (int i = 0; i <= kGrid; ++i) {
    const double r = r_max * std::pow(10.0, -12.0 * (kGrid - i) / kGrid);
    const double v = g(r);
    if (v < 0) cert.nonnegative = false;
    if (v < prev - 1e-12 * std::max(1.0, std::abs(prev))) {
      cert.monotone = false;
      break;
    }
    prev = v;
    cert.nondecreasing_checked_up_to = r;
  }

  for (int k = 5; k >= 0; --k) {
    const double r = r_max / std::pow(10.0, k);
    cert.sublinearity_ratios.emplace_back(r, g(r) / r);
  }
  const auto& ratios = cert.sublinearity_ratios;
  const std::size_t m = ratios.size();
  const bool decreasing = ratios[m - 3].second > ratios[m - 2].second && ratios[m - 2].second > ratios[m - 1].second;
  const bool small = ratios[m - 1].second < threshold;

  if (!cert.nonnegative) cert.reason = "negative values";
  else if (!cert.monotone) cert.reason = "not nondecreasing";
  else if (!decreasing) cert.reason = "u(r)/r not decreasing across the top three checkpoints";
  else if (!small) cert.reason = "u(r)/r above threshold at r_max";
  cert.admissible = cert.reason.empty();
  return cert;
}

}  // namespace mobius

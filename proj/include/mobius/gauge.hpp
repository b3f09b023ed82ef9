#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mobius {

/// Nondecreasing scale function r -> u(r), optionally multiplied by a
/// constant factor (see `scaled`).
class Gauge {
 public:
  enum class Kind { log, power, constant, table };

  /// r -> c log(n0 + r)
  static Gauge log(double c, double n0);
  /// r -> c r^beta
  static Gauge power(double c, double beta);
  static Gauge constant(double c);
  /// Piecewise-linear through (r_i, u_i), flat outside the sampled range.
  static Gauge table(std::vector<double> r, std::vector<double> u);

  /// `log:c,n0` | `pow:c,beta` | `const:c` | `table:<path.csv>`, with an
  /// optional `<factor>*` prefix. Table paths are resolved against
  /// `base_dir` when relative.
  static Gauge parse(std::string_view spec, const std::filesystem::path& base_dir = {});

  double operator()(double r) const;

  /// The gauge r -> factor * u(r).
  Gauge scaled(double factor) const;

  Kind kind() const { return kind_; }
  double factor() const { return factor_; }
  std::string to_string() const;

 private:
  Kind kind_ = Kind::constant;
  double a_ = 0.0, b_ = 0.0;
  double factor_ = 1.0;
  std::vector<double> rs_, us_;
  std::string source_;
};

struct GaugeCertificate {
  bool admissible = false;
  bool nonnegative = true;
  bool monotone = true;
  double nondecreasing_checked_up_to = 0.0;
  double threshold = 0.05;
  /// (checkpoint r, u(r)/r) on a decade grid ending at r_max, ascending in r.
  std::vector<std::pair<double, double>> sublinearity_ratios;
  std::string reason;
};

/// Certifies admissibility on a finite grid: nonnegative and nondecreasing on
/// a geometric grid up to `r_max`, u(r)/r below `threshold` at r_max and
/// strictly decreasing across the top three decade checkpoints.
GaugeCertificate check_gauge(const Gauge& g, double r_max, double threshold = 0.05);

}  // namespace mobius

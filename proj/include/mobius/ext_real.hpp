#pragma once

#include <cmath>
#include <compare>
#include <limits>
#include <ostream>

namespace mobius {

/// A value in [0, INF] on the projectively extended half line. There is a
/// single unsigned INF, with 1/0 = INF and 1/INF = 0.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr ExtReal(double v) : v_(v) {}  // NOLINT(google-explicit-constructor)

  static constexpr ExtReal inf() { return ExtReal(std::numeric_limits<double>::infinity()); }

  constexpr bool is_inf() const { return v_ == std::numeric_limits<double>::infinity(); }
  constexpr bool is_zero() const { return v_ == 0.0; }
  constexpr bool is_finite() const { return !is_inf(); }
  constexpr double value() const { return v_; }

  constexpr ExtReal reciprocal() const {
    if (is_zero()) return inf();
    if (is_inf()) return ExtReal(0.0);
    return ExtReal(1.0 / v_);
  }

  friend constexpr auto operator<=>(ExtReal a, ExtReal b) = default;

 private:
  double v_ = 0.0;
};

inline std::ostream& operator<<(std::ostream& os, ExtReal x) {
  if (x.is_inf()) return os << "inf";
  return os << x.value();
}

}  // namespace mobius

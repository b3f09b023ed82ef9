#include "mobius/heisenberg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mobius/error.hpp"
#include "mobius/sampling.hpp"

namespace mobius {

namespace {

void check_dims(const HeisPoint& g, const HeisPoint& h) {
  if (g.dim() != h.dim())
    throw PreconditionError("heisenberg: dimension mismatch (" + std::to_string(g.dim()) + " vs " +
                            std::to_string(h.dim()) + ")");
}

double norm2(const std::vector<Complex>& a) {
  double s = 0;
  for (const auto& z : a) s += std::norm(z);
  return s;
}

/// 1/(1+(s-u^2)^2) + 1/(1+(s+u^2)^2) as a function of v = u - c, c = sqrt|s|.
/// Writing s - u^2 = -v(2c + v) + (s - c^2) keeps the peak at v = 0 free of
/// cancellation, which matters once s is large.
class LorentzPair {
 public:
  explicit LorentzPair(double s) : s_(std::abs(s)), c_(std::sqrt(s_)), rest_(s_ - c_ * c_) {}
  double center() const { return c_; }
  double operator()(double v) const {
    const double minus = -v * (2.0 * c_ + v) + rest_;
    const double u = c_ + v;
    const double plus = s_ + u * u;
    return 1.0 / (1.0 + minus * minus) + 1.0 / (1.0 + plus * plus);
  }

 private:
  double s_, c_, rest_;
};

/// Integral over [0, u_max] of f(u, v), v = u - c, as a sum of adaptive
/// Gauss-Kronrod pieces in the variable v: a geometric partition in u plus
/// breakpoints around the peak at v = 0. The caller bounds the tail.
struct HalfLineIntegral {
  double value = 0;
  double error = 0;
  std::size_t nodes = 0;
};

template <class F>
HalfLineIntegral integrate_half_line(F&& f, double c, double u_max, std::size_t budget) {
  if (budget < 1000) throw PreconditionError("quadrature budget must be >= 1000 nodes");
  std::vector<double> vs = {-c, u_max - c};
  for (double u = 1.0 / 16; u < u_max; u *= 2)
    if (std::abs(u - c) > 0.5 * u) vs.push_back(u - c);
  const double w = 1.0 / (2.0 * c + 1.0);  // peak half-width in u
  vs.push_back(0.0);
  for (double m : {1.0, 4.0, 16.0, 64.0, 256.0, 1024.0}) {
    vs.push_back(-m * w);
    vs.push_back(m * w);
  }
  std::erase_if(vs, [&](double v) { return v < -c || v > u_max - c; });
  std::sort(vs.begin(), vs.end());
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());

  HalfLineIntegral out;
  auto counted = [&](double v) {
    ++out.nodes;
    return f(c + v, v);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  for (std::size_t i = 0; i + 1 < vs.size(); ++i) {
    double err = 0;
    out.value += GK::integrate(counted, vs[i], vs[i + 1], 15, 1e-9, &err);
    out.error += err;
    if (out.nodes > budget)
      throw NumericError("quadrature did not converge within " + std::to_string(budget) + " nodes");
  }
  if (!(out.error <= 1e-8 * std::max(1e-300, std::abs(out.value))))
    throw NumericError("quadrature error estimate " + std::to_string(out.error) + " too large");
  return out;
}

}  // namespace

HeisPoint heis_identity(std::size_t dim) { return HeisPoint{std::vector<Complex>(dim), 0.0}; }

Complex heis_inner(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  if (a.size() != b.size()) throw PreconditionError("heisenberg: dimension mismatch");
  Complex s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * std::conj(b[k]);
  return s;
}

double heis_omega(const std::vector<Complex>& a, const std::vector<Complex>& b) { return heis_inner(a, b).imag(); }

HeisPoint heis_mul(const HeisPoint& g, const HeisPoint& h) {
  check_dims(g, h);
  HeisPoint out;
  out.a.resize(g.dim());
  for (std::size_t k = 0; k < g.dim(); ++k) out.a[k] = g.a[k] + h.a[k];
  out.t = g.t + h.t + 2.0 * heis_omega(g.a, h.a);
  return out;
}

HeisPoint heis_inv(const HeisPoint& g) {
  HeisPoint out = g;
  for (auto& z : out.a) z = -z;
  out.t = -g.t;
  return out;
}

double heis_norm(const HeisPoint& g, HeisNorm which) {
  const double a2 = norm2(g.a);
  const double k2 = std::sqrt(a2 * a2 + g.t * g.t);  // Koranyi norm squared
  switch (which) {
    case HeisNorm::N: return std::sqrt(k2 + a2);
    case HeisNorm::koranyi: return std::sqrt(k2);
    case HeisNorm::horizontal: return std::sqrt(a2);
  }
  return 0;
}

double heis_distance(const HeisPoint& g, const HeisPoint& h) { return heis_norm(heis_mul(g, heis_inv(h))); }

std::vector<HeisPoint> random_heis_points(std::size_t dim, std::size_t count, std::uint64_t seed, double t_range) {
  if (dim == 0) throw PreconditionError("heisenberg sample needs dim >= 1");
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-t_range, t_range);
  std::vector<HeisPoint> out(count);
  for (auto& g : out) {
    g.a.resize(dim);
    for (auto& z : g.a) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      z = Complex(re, im);
    }
    g.t = unif(rng);
  }
  return out;
}

PointSpace heis_space(const std::vector<HeisPoint>& points) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < points.size(); ++i) labels.push_back("g" + std::to_string(i));
  PointSpace s(std::move(labels));
  for (Index i = 0; i < points.size(); ++i)
    for (Index j = i + 1; j < points.size(); ++j) s.set_distance(i, j, ExtReal(heis_distance(points[i], points[j])));
  return s;
}

double KernelMatrix::hermitian_defect() const { return (entries - entries.adjoint()).cwiseAbs().maxCoeff(); }

KernelMatrix KernelMatrix::from_real(const Eigen::MatrixXd& m) { return KernelMatrix{m.cast<Complex>()}; }

Complex phi_lambda(const HeisPoint& g, double lambda) {
  return std::exp(Complex(-std::abs(lambda) * norm2(g.a), lambda * g.t));
}

KernelMatrix phi_lambda_gram(const std::vector<HeisPoint>& points, double lambda, GramOrdering ordering) {
  const auto n = static_cast<Eigen::Index>(points.size());
  KernelMatrix k{Eigen::MatrixXcd(n, n)};
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& gj = points[static_cast<std::size_t>(j)];
      const auto& gk = points[static_cast<std::size_t>(c)];
      const HeisPoint e = ordering == GramOrdering::left ? heis_mul(heis_inv(gk), gj) : heis_mul(gj, heis_inv(gk));
      k.entries(j, c) = phi_lambda(e, lambda);
    }
  return k;
}

SpectrumReport psd_test(const KernelMatrix& k, double rel_tol) {
  SpectrumReport rep;
  if (k.size() == 0) {
    rep.passed = true;
    return rep;
  }
  const Eigen::MatrixXcd h = 0.5 * (k.entries + k.entries.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("psd_test: eigensolver failed");
  const auto& ev = es.eigenvalues();
  rep.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  rep.min_eigenvalue = ev.minCoeff();
  rep.max_eigenvalue = ev.maxCoeff();
  rep.spectral_radius = ev.cwiseAbs().maxCoeff();
  rep.tolerance = rel_tol * std::max(1.0, rep.spectral_radius);
  rep.passed = rep.min_eigenvalue >= -rep.tolerance;
  return rep;
}

CndReport check_cnd(const KernelMatrix& k, double rel_tol) {
  const auto n = static_cast<Eigen::Index>(k.size());
  const Eigen::MatrixXd m = k.real();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (k.entries.imag().cwiseAbs().maxCoeff() > 1e-12 * scale) throw PreconditionError("check_cnd: kernel is not real");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw PreconditionError("check_cnd: kernel is not symmetric");
  if (m.diagonal().cwiseAbs().maxCoeff() > 1e-12 * scale) throw PreconditionError("check_cnd: kernel has a nonzero diagonal");
  CndReport rep;
  if (n < 2) {
    rep.is_cnd = true;
    return rep;
  }
  const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd c = p * m * p;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_c(0.5 * (c + c.transpose()), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_k(m, Eigen::EigenvaluesOnly);
  if (es_c.info() != Eigen::Success || es_k.info() != Eigen::Success) throw NumericError("check_cnd: eigensolver failed");
  const auto& ev = es_c.eigenvalues();
  rep.centered_spectrum.assign(ev.data(), ev.data() + ev.size());
  rep.max_centered_eigenvalue = ev.maxCoeff();
  rep.spectral_radius = es_k.eigenvalues().cwiseAbs().maxCoeff();
  rep.is_cnd = rep.max_centered_eigenvalue <= rel_tol * rep.spectral_radius;
  return rep;
}

PointSpace GnsEmbedding::as_space(const std::vector<std::string>& labels) const {
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < coordinates.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(coordinates.cols()));
    for (Eigen::Index c = 0; c < coordinates.cols(); ++c) r[static_cast<std::size_t>(c)] = coordinates(i, c);
    rows.push_back(std::move(r));
  }
  PointSpace s = PointSpace::from_coords(labels, std::move(rows), 2.0);
  s.set_origin(basepoint);
  return s;
}

GnsEmbedding gns_embed(const KernelMatrix& k, std::size_t basepoint, double rel_tol) {
  const auto n = static_cast<Eigen::Index>(k.size());
  if (basepoint >= k.size()) throw PreconditionError("gns_embed: basepoint out of range");
  const Eigen::MatrixXd m = k.real();
  const auto b = static_cast<Eigen::Index>(basepoint);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = 0.5 * (m(i, b) + m(j, b) - m(i, j));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g + g.transpose()));
  if (es.info() != Eigen::Success) throw NumericError("gns_embed: eigensolver failed");
  Eigen::VectorXd ev = es.eigenvalues();
  const double radius = std::max(1e-300, ev.cwiseAbs().maxCoeff());
  GnsEmbedding out;
  out.basepoint = basepoint;
  out.clipped_eigenvalue = std::min(0.0, ev.minCoeff());
  if (out.clipped_eigenvalue < -rel_tol * radius)
    throw NumericError("gns_embed: kernel is not conditionally of negative type (Gram eigenvalue " +
                       std::to_string(out.clipped_eigenvalue) + ")");
  ev = ev.cwiseMax(0.0);
  out.coordinates = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
  const Eigen::RowVectorXd shift = out.coordinates.row(b);
  out.coordinates.rowwise() -= shift;
  const double scale = std::max(1e-300, m.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (out.coordinates.row(i) - out.coordinates.row(j)).squaredNorm();
      out.reconstruction_error = std::max(out.reconstruction_error, std::abs(d2 - m(i, j)) / scale);
    }
  return out;
}

KernelMatrix heis_distance_kernel(const std::vector<HeisPoint>& points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      m(i, j) = m(j, i) = heis_distance(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
  return KernelMatrix::from_real(m);
}

IntegralReport integral_identity(double r, double t, std::size_t budget) {
  if (!(r > 0)) throw PreconditionError("integral_identity: r must be positive");
  const double s = t / (r * r);
  // y = u^2: integrand 2 u^2 (L(s - u^2) + L(s + u^2)) = 4/u^2 + O((1 + s^2)/u^6)
  // once u^2 >= 2|s|, so the tail past u_max is 4/u_max up to that remainder.
  const double u_max = std::max(1e10, 2.0 * std::sqrt(2.0 * std::abs(s)));
  const LorentzPair lp(s);
  auto f = [&lp](double u, double v) { return 2.0 * u * u * lp(v); };
  const auto q = integrate_half_line(f, lp.center(), u_max, budget);
  const double tail = 4.0 / u_max;
  const double tail_error = 10.0 * (1.0 + s * s) / std::pow(u_max, 5);
  IntegralReport rep;
  rep.lhs = r * (q.value + tail);
  rep.rhs = std::numbers::pi * std::sqrt(std::sqrt(std::pow(r, 4) + t * t) + r * r);
  rep.rel_error = std::abs(rep.lhs / rep.rhs - 1.0);
  rep.error_estimate = r * (q.error + tail_error);
  rep.nodes = q.nodes;
  return rep;
}

double cauchy_smoothed(double a_norm, double t, double eps, std::size_t budget) {
  if (!(a_norm >= 0) || !(eps > 0)) throw PreconditionError("cauchy_smoothed: a_norm >= 0 and eps > 0 required");
  if (a_norm == 0) return std::exp(-eps * std::sqrt(std::abs(t)));
  const double k = a_norm * a_norm, s = t / k, sk = std::sqrt(k);
  // x = k u^2; tail integrand <= 10/u^3, tail <= 5/u_max^2 before the 1/pi.
  const double u_max = std::max(std::sqrt(5.0 / 1e-12), 2.0 * std::sqrt(2.0 * std::abs(s)));
  const LorentzPair lp(s);
  auto f = [&](double u, double v) { return 2.0 * u * lp(v) * std::exp(-eps * sk * u); };
  return integrate_half_line(f, lp.center(), u_max, budget).value / std::numbers::pi;
}

double cnd_quotient(double a_norm, double t, double eps, std::size_t budget) {
  if (!(a_norm >= 0) || !(eps > 0)) throw PreconditionError("cnd_quotient: a_norm >= 0 and eps > 0 required");
  if (a_norm == 0) return -std::expm1(-eps * std::sqrt(std::abs(t))) / eps;
  const double k = a_norm * a_norm, s = t / k, sk = std::sqrt(k);
  // (1 - exp(-eps sqrt x))/eps <= 1/eps, so the tail past u_max is at most
  // 5/(eps u_max^2) before the 1/pi; keep it below 1e-10.
  const double u_max = std::max(std::sqrt(5.0 / (eps * 1e-10)), 2.0 * std::sqrt(2.0 * std::abs(s)));
  const LorentzPair lp(s);
  auto f = [&](double u, double v) { return 2.0 * u * lp(v) * (-std::expm1(-eps * sk * u) / eps); };
  return integrate_half_line(f, lp.center(), u_max, budget).value / std::numbers::pi;
}

CndLimitReport cnd_limit_check(double a_norm, double t, const std::vector<double>& eps_sequence, std::size_t budget) {
  if (!(a_norm > 0)) throw PreconditionError("cnd_limit_check: a_norm must be positive");
  if (eps_sequence.empty()) throw PreconditionError("cnd_limit_check: empty eps sequence");
  for (std::size_t i = 0; i < eps_sequence.size(); ++i)
    if (!(eps_sequence[i] > 0) || (i > 0 && !(eps_sequence[i] < eps_sequence[i - 1])))
      throw PreconditionError("cnd_limit_check: eps sequence must be positive and decreasing");
  CndLimitReport rep;
  rep.eps = eps_sequence;
  for (double e : eps_sequence) rep.values.push_back(cnd_quotient(a_norm, t, e, budget));
  const double a2 = a_norm * a_norm;
  rep.target = std::sqrt(std::sqrt(a2 * a2 + t * t) + a2);
  const std::size_t m = rep.values.size();
  if (m >= 2) {
    const double e1 = rep.eps[m - 2], e2 = rep.eps[m - 1], v1 = rep.values[m - 2], v2 = rep.values[m - 1];
    rep.limit_estimate = v2 - e2 * (v1 - v2) / (e1 - e2);
  } else {
    rep.limit_estimate = rep.values.back();
  }
  rep.final_rel_gap = std::abs(rep.values.back() / rep.target - 1.0);
  rep.monotone = true;
  for (std::size_t i = 1; i < m; ++i)
    if (!(rep.values[i] > rep.values[i - 1])) rep.monotone = false;
  return rep;
}

KernelMatrix cnd_quotient_kernel(const std::vector<HeisPoint>& points, double eps, std::size_t budget) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const HeisPoint e = heis_mul(points[static_cast<std::size_t>(i)], heis_inv(points[static_cast<std::size_t>(j)]));
      m(i, j) = m(j, i) = cnd_quotient(heis_norm(e, HeisNorm::horizontal), e.t, eps, budget);
    }
  return KernelMatrix::from_real(m);
}

}  // namespace mobius

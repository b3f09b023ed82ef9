#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mobius/point_space.hpp"

namespace mobius {

using Complex = std::complex<double>;

/// (a, t) with a in C^dim, t real.
struct HeisPoint {
  std::vector<Complex> a;
  double t = 0;

  std::size_t dim() const { return a.size(); }
};

HeisPoint heis_identity(std::size_t dim);

/// <a, b> = sum a_k conj(b_k)
Complex heis_inner(const std::vector<Complex>& a, const std::vector<Complex>& b);
/// Omega(a, b) = Im <a, b>
double heis_omega(const std::vector<Complex>& a, const std::vector<Complex>& b);

/// (a, t)(a', t') = (a + a', t + t' + 2 Omega(a, a'))
HeisPoint heis_mul(const HeisPoint& g, const HeisPoint& h);
HeisPoint heis_inv(const HeisPoint& g);

enum class HeisNorm {
  N,           ///< sqrt(sqrt(|a|^4 + t^2) + |a|^2)
  koranyi,     ///< (|a|^4 + t^2)^(1/4)
  horizontal,  ///< |a|
};

double heis_norm(const HeisPoint& g, HeisNorm which = HeisNorm::N);

/// d_N(g, h) = N(g h^-1)
double heis_distance(const HeisPoint& g, const HeisPoint& h);

/// Seeded sample: real and imaginary parts of a standard normal, t uniform
/// on [-t_range, t_range].
std::vector<HeisPoint> random_heis_points(std::size_t dim, std::size_t count, std::uint64_t seed,
                                          double t_range = 2.0);

/// Real-valued d_N distance table on the given points as a PointSpace
/// (labels "g0", "g1", ...).
PointSpace heis_space(const std::vector<HeisPoint>& points);

/// Square kernel matrix; real kernels have zero imaginary part.
struct KernelMatrix {
  Eigen::MatrixXcd entries;

  std::size_t size() const { return static_cast<std::size_t>(entries.rows()); }
  Eigen::MatrixXd real() const { return entries.real(); }
  /// max |K_ij - conj(K_ji)|
  double hermitian_defect() const;
  static KernelMatrix from_real(const Eigen::MatrixXd& m);
};

/// Which group element feeds Phi for the (j, k) entry.
enum class GramOrdering {
  left,   ///< Phi(g_k^-1 g_j)
  right,  ///< Phi(g_j g_k^-1)
};

/// Phi_lambda(a, t) = exp(-|lambda| |a|^2 + i lambda t)
Complex phi_lambda(const HeisPoint& g, double lambda);

KernelMatrix phi_lambda_gram(const std::vector<HeisPoint>& points, double lambda,
                             GramOrdering ordering = GramOrdering::left);

struct SpectrumReport {
  std::vector<double> eigenvalues;  ///< ascending
  double min_eigenvalue = 0;
  double max_eigenvalue = 0;
  double spectral_radius = 0;
  double tolerance = 0;  ///< absolute threshold used for the decision
  bool passed = false;
};

/// PSD iff the smallest eigenvalue of the Hermitian part is >= -rel_tol times
/// max(1, spectral radius).
SpectrumReport psd_test(const KernelMatrix& k, double rel_tol = 1e-8);

struct CndReport {
  bool is_cnd = false;
  double max_centered_eigenvalue = 0;
  double spectral_radius = 0;  ///< of K
  std::vector<double> centered_spectrum;
};

/// CND iff P K P is negative semidefinite (P the centring projection), with
/// tolerance rel_tol * spectral radius of K. Throws PreconditionError on a
/// non-symmetric or nonzero-diagonal K.
CndReport check_cnd(const KernelMatrix& k, double rel_tol = 1e-8);

struct GnsEmbedding {
  std::size_t basepoint = 0;
  Eigen::MatrixXd coordinates;  ///< one row per point; row `basepoint` is 0
  double clipped_eigenvalue = 0;  ///< most negative Gram eigenvalue set to 0
  double reconstruction_error = 0;  ///< max |K_ij - |T_i - T_j|^2| / max(1e-300, max |K|)

  /// Euclidean coordinate space on the embedded points.
  PointSpace as_space(const std::vector<std::string>& labels) const;
};

/// G_ij = (K_ib + K_jb - K_ij)/2, factored through its eigendecomposition.
/// Throws NumericError when G has an eigenvalue below -rel_tol times its
/// spectral radius.
GnsEmbedding gns_embed(const KernelMatrix& k, std::size_t basepoint = 0, double rel_tol = 1e-8);

/// d_N Gram matrix of the points.
KernelMatrix heis_distance_kernel(const std::vector<HeisPoint>& points);

struct IntegralReport {
  double lhs = 0;
  double rhs = 0;
  double rel_error = 0;
  double error_estimate = 0;  ///< quadrature estimate plus truncated tail bound
  std::size_t nodes = 0;      ///< integrand evaluations
};

/// r^2 int sqrt|x| / (r^4 + (t - x)^2) dx against pi sqrt(sqrt(r^4 + t^2) + r^2).
/// Throws NumericError when the quadrature does not converge within `budget`
/// integrand evaluations.
IntegralReport integral_identity(double r, double t, std::size_t budget = 20000);

/// F_eps(a, t) = int h_{a^2}(t - x) exp(-eps sqrt|x|) dx with the Cauchy
/// density h_k(x) = (k/pi) / (k^2 + x^2); F_eps(0, t) = exp(-eps sqrt|t|).
double cauchy_smoothed(double a_norm, double t, double eps, std::size_t budget = 20000);

/// (1 - F_eps(a, t)) / eps, evaluated without cancellation.
double cnd_quotient(double a_norm, double t, double eps, std::size_t budget = 20000);

struct CndLimitReport {
  std::vector<double> eps;
  std::vector<double> values;  ///< (1 - F_eps)/eps
  double target = 0;           ///< sqrt(sqrt(a^4 + t^2) + a^2)
  double limit_estimate = 0;   ///< linear extrapolation of the last two values to eps = 0
  double final_rel_gap = 0;    ///< |values.back() / target - 1|
  bool monotone = false;       ///< values strictly increase as eps decreases
};

CndLimitReport cnd_limit_check(double a_norm, double t, const std::vector<double>& eps_sequence,
                               std::size_t budget = 20000);

/// K_ij = (1 - F_eps(g_i g_j^-1)) / eps.
KernelMatrix cnd_quotient_kernel(const std::vector<HeisPoint>& points, double eps, std::size_t budget = 20000);

}  // namespace mobius

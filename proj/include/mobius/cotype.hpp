#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mobius/point_space.hpp"

namespace mobius {

/// f: Z_m^n -> target, stored as a table over the m^n arguments. Argument
/// (x_1, ..., x_n) has index x_1 + x_2 m + ... + x_n m^(n-1).
struct CotypeInstance {
  int n = 1;
  int m = 2;
  double q = 2;
  std::shared_ptr<const PointSpace> target;
  std::vector<Index> f;

  std::size_t cells() const;
  /// Throws PreconditionError on odd m, n < 1, q <= 0 or a partial table.
  void validate() const;
};

enum class SideMode { automatic, exhaustive, monte_carlo };

struct CotypeOptions {
  SideMode mode = SideMode::automatic;
  std::uint64_t enumeration_budget = 50'000'000;  ///< max m^n 3^n terms for exhaustive mode
  std::size_t mc_samples = 200'000;
  std::uint64_t seed = 0;
};

struct CotypeSides {
  double lhs = 0;
  double rhs = 0;
  double ratio = 0;
  bool exhaustive = true;
  std::size_t samples = 0;  ///< Monte Carlo draws per side (0 when exhaustive)
  double lhs_stderr = 0;
  double rhs_stderr = 0;
  /// Distances are measured in this unit (1 unless q > 8, where the target
  /// diameter is used so that d^q stays finite; the ratio is unaffected).
  double distance_unit = 1;
};

/// lhs = sum_j E_x d(f(x + (m/2) e_j), f(x))^q,
/// rhs = m^q E_{eps in {-1,0,1}^n, x} d(f(x + eps), f(x))^q, ratio = lhs/rhs (0/0 = 0).
CotypeSides cotype_sides(const CotypeInstance& inst, const CotypeOptions& opts = {});

struct SearchOptions {
  std::uint64_t budget = 100'000;  ///< exhaustive when |T|^(m^n) <= budget
  std::size_t restarts = 20;
  std::size_t max_steps = 10'000;  ///< improving moves per restart
  std::uint64_t seed = 0;
  /// Optional starting table for restart 0 (for instance a lifted optimum
  /// from dimension n - 1).
  std::optional<std::vector<Index>> initial;
};

struct CotypeSearchResult {
  std::vector<Index> best_f;
  double best_ratio = 0;
  std::string method;  ///< "exhaustive" or "local_search"
  std::uint64_t evaluated = 0;  ///< functions (exhaustive) or candidate moves (local)
  std::size_t restarts = 0;
  std::size_t steps = 0;  ///< accepted moves summed over restarts
  std::size_t best_restart = 0;
  /// best_ratio^(1/q): lower bound for the cotype constant.
  double constant_lower_bound = 0;
};

CotypeSearchResult cotype_search(int n, int m, double q, std::shared_ptr<const PointSpace> target,
                                 const SearchOptions& opts = {});

/// Table for g(x_1, ..., x_n) = f(x_1, ..., x_{n-1}); same ratio as f.
std::vector<Index> lift_table(const std::vector<Index>& f, int n_from, int m);

/// f: {-1,1}^n -> target; bit j of the argument index is 1 when eps_j = +1.
struct EnfloInstance {
  int n = 1;
  double p = 2;
  std::shared_ptr<const PointSpace> target;
  std::vector<Index> f;
};

struct EnfloSides {
  double lhs = 0;       ///< E d(f(eps), f(-eps))^p
  double rhs_sum = 0;   ///< sum_j E d(f(eps), f(eps with eps_j flipped))^p
  double ratio = 0;     ///< lhs / rhs_sum, 0/0 = 0
  double type_lower_bound = 0;  ///< ratio^(1/p)
};

EnfloSides enflo_sides(const EnfloInstance& inst, std::uint64_t enumeration_budget = 1u << 26);

struct ScanRow {
  int n = 0;
  std::optional<int> minimal_m;
  double floor = 0;  ///< (1/C) n^(1/q)
  std::string status;  ///< "ok" or "open"
  std::vector<std::pair<int, double>> ratios;  ///< (m, searched sup ratio)
};

/// For each n, the least even candidate m whose searched sup ratio is <= C^q.
std::vector<ScanRow> min_m_scan(const std::vector<int>& n_values, double q, std::shared_ptr<const PointSpace> target,
                                double c_target, std::vector<int> m_candidates, const SearchOptions& opts = {});

/// Instance file: `#n=`, `#m=`, `#q=` directives, then rows `x_1,...,x_n,target_id`
/// (header row optional).
CotypeInstance read_cotype_instance(std::istream& in, std::shared_ptr<const PointSpace> target);
void write_cotype_instance(std::ostream& out, const CotypeInstance& inst);

/// CSV `n,minimal_m,floor,status`.
void write_scan_csv(std::ostream& out, const std::vector<ScanRow>& rows);

}  // namespace mobius

#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "ojaflow/linalg.hpp"
#include "ojaflow/matrix.hpp"
#include "ojaflow/stiefel.hpp"
#include "ojaflow/trajectory.hpp"

namespace ojaflow {

// Indices in this header are 0-based: sigma[m] = k means σ_{m+1} = k+1.

inline constexpr double kSigmaTol = 1e-9;
/// Relative determinants at or below this are treated as exact zeros.
inline constexpr double kStructuralZero = 1e-14;

struct SigmaAnalysis {
  std::vector<std::size_t> sigma;
  /// A candidate was rejected with relative determinant in (kStructuralZero, tol]:
  /// the choice at that stage is numerically fragile.
  bool ambiguous = false;
  std::optional<std::size_t> ambiguous_stage;
};

/// |det| of Q[rows; cols] divided by the product of the full column norms of
/// the selected columns.
double relative_minor(const Matrix& q, std::span<const std::size_t> rows,
                      std::span<const std::size_t> cols);

/// Throws singular when Q is not invertible at `tol`, ambiguous (with the
/// stage index) when no candidate passes at some stage.
SigmaAnalysis analyze_sigma(const Matrix& q, double tol = kSigmaTol);
std::vector<std::size_t> sigma_permutation(const Matrix& q, double tol = kSigmaTol);

/// z_m: the pivot left in column σ_m of row m after subtracting the
/// combination of rows 1..m−1 that clears the columns i_{m−1}. Equals
/// ±det(Q[1..m; i_m]) / det(Q[1..m−1; i_{m−1}]) (i_m ascending), the sign being
/// (−1)^{m+pos} with pos the 1-based slot of σ_m in i_m.
std::vector<double> z_values(const Matrix& q, double tol = kSigmaTol);

struct LimitPrediction {
  std::vector<std::size_t> sigma;
  std::vector<std::vector<std::size_t>> prefixes;  // i_m, ascending
  std::vector<double> z;
  std::vector<int> signs;
  Matrix limit;  // column σ_m is sgn(z_m)·e_m (in A's eigenbasis)
};

/// Diagonal-A convention: e_m are coordinate vectors.
LimitPrediction predict_limit(const StiefelPoint& q0, double tol = kSigmaTol);
/// General A: the analysis runs on VᵀQ0 and the limit is mapped back by V.
LimitPrediction predict_limit(const SpectralMatrix& a, const StiefelPoint& q0,
                              double tol = kSigmaTol);

/// rank(Q[1..m; 1..j]) + #{k ≤ m : σ_k > j} == m, with m, j counts in 1..n.
bool rank_identity_check(const Matrix& q, std::size_t m, std::size_t j, double tol = kSigmaTol);

/// Every leading principal minor nonzero (same normalization as σ).
bool is_stable_basin(const Matrix& q0, double tol = kSigmaTol);

struct RateVector {
  std::vector<double> nu;
};
RateVector convergence_rates(const SpectralMatrix& a, double min_gap = 1e-9);

enum class EntryVerdict { pass, fail, floor };
const char* to_string(EntryVerdict v) noexcept;

struct EntryRate {
  std::size_t i = 0;
  std::size_t j = 0;
  double slope = 0.0;  // NaN for floor
  double bound = 0.0;  // −2ν_{min(i,j)}
  std::size_t samples = 0;
  EntryVerdict verdict = EntryVerdict::floor;
};

struct ExponentialOptions {
  std::optional<std::pair<double, double>> window;
  double slack = 0.1;
  double floor = 1e-12;
  std::size_t min_samples = 10;
  /// Eigenvector matrix V when A is not diagonal; entries are read from VᵀQ.
  std::optional<Matrix> basis;
};

struct ExponentialReport {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::vector<EntryRate> entries;
  bool all_ok = true;  // no entry failed
};

/// Least-squares slope of log|q_ij² − δ_ij| over the window, per entry.
/// Default window: the last half of the part of the trajectory after
/// energy_max − E first drops below 1e−3.
ExponentialReport verify_exponential(const Trajectory& traj, const RateVector& rates,
                                     const ExponentialOptions& opts = {});

enum class InvarianceVerdict { holds, violated, indeterminate };
const char* to_string(InvarianceVerdict v) noexcept;

struct SigmaInvariance {
  InvarianceVerdict verdict = InvarianceVerdict::holds;
  std::vector<std::size_t> sigma0;
  std::optional<double> first_violation;
  std::vector<double> indeterminate_times;
};

SigmaInvariance sigma_invariance_check(const Trajectory& traj, double tol = kSigmaTol,
                                       const std::optional<Matrix>& basis = std::nullopt);

}  // namespace ojaflow

#pragma once

#include <vector>

#include "ojaflow/linalg.hpp"
#include "ojaflow/matrix.hpp"
#include "ojaflow/stiefel.hpp"
#include "ojaflow/trajectory.hpp"

namespace ojaflow {

/// Largest admissible 2(λ₁ − λ_n)·|t| for a single UL factorization.
inline constexpr double kConditioningBudget = 60.0;

/// G(t) with G·Gᵀ = Q0ᵀe^{−2At}Q0, built as a product of sub-step factors.
/// Throws conditioning (limit = largest admissible |t|) when 2(λ₁−λ_n)|t|
/// exceeds `budget`.
UpperTriangularFactor g_factor(const SpectralMatrix& a, const Matrix& q0, double t,
                               double budget = kConditioningBudget);

enum class ClosedFormMethod { ul_direct, ul_composed };
const char* to_string(ClosedFormMethod m) noexcept;

/// Q(t) = e^{At}Q0·G(t). One shifted UL factorization when 2(λ₁−λ_n)|t| is
/// at most kStepExponent; otherwise the flow map is composed from equal
/// sub-steps, each exact, which keeps every factorization well conditioned.
class ClosedFormSolution {
 public:
  static constexpr double kStepExponent = 8.0;

  ClosedFormSolution(SpectralMatrix a, StiefelPoint q0);

  const SpectralMatrix& a() const noexcept { return a_; }
  const StiefelPoint& q0() const noexcept { return q0_; }
  /// 2(λ₁ − λ_n)
  double conditioning_exponent() const noexcept { return exponent_; }
  ClosedFormMethod method_for(double t) const noexcept;

  StiefelPoint evaluate(double t) const;

 private:
  SpectralMatrix a_;
  StiefelPoint q0_;
  double exponent_;
  double shift_;
};

StiefelPoint closed_form_Q(const SpectralMatrix& a, const StiefelPoint& q0, double t);

/// Per k: |g_kk(t) − exp(−∫₀ᵗ q_k·Aq_k ds)| with t the last sample time and the
/// integral by composite trapezoid over the trajectory samples.
std::vector<double> diag_consistency_check(const SpectralMatrix& a, const Trajectory& traj);

}  // namespace ojaflow

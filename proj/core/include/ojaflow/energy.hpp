#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ojaflow/linalg.hpp"
#include "ojaflow/matrix.hpp"

namespace ojaflow {

/// Strictly decreasing weights μ₁ > … > μ_n defining N = diag(μ).
class WeightVector {
 public:
  static constexpr double kDefaultMinGap = 1e-9;

  explicit WeightVector(std::vector<double> mu, double min_gap = kDefaultMinGap);
  /// μ_i = n − i + 1.
  static WeightVector defaults(std::size_t n);

  std::size_t n() const noexcept { return mu_.size(); }
  const std::vector<double>& values() const noexcept { return mu_; }
  Matrix matrix() const { return Matrix::diagonal(mu_); }

 private:
  std::vector<double> mu_;
};

/// Signed permutation diag(ε)·P. Column j carries its single nonzero in row
/// `row_of[j]` with sign `sign[j]`.
struct EquilibriumElement {
  std::vector<std::size_t> row_of;  // τ, 0-based
  std::vector<int> sign;            // per column

  std::size_t n() const noexcept { return row_of.size(); }
  Matrix matrix() const;
  bool is_identity_permutation() const;
};

struct StabilityReport {
  EquilibriumElement equilibrium;
  /// b[j][i]: linearization eigenvalue of component i in column j.
  std::vector<std::vector<double>> eigenvalues;
  bool stable = false;
};

double rayleigh(const Matrix& a, const Matrix& q);
/// tr(N QᵀAQ) using the first p weights when Q is n×p.
double weighted_rayleigh(const Matrix& a, const WeightVector& n, const Matrix& q);
/// Σ μ_i λ_i, the maximum of weighted_rayleigh over O(n).
double max_weighted_rayleigh(const SpectralMatrix& a, const WeightVector& n);

/// d/dt of −E along the SGA flow: −2 Σ_{k<j} (μ_k − μ_j)(q_k·Aq_j)².
double lyapunov_derivative(const Matrix& a, const WeightVector& n, const Matrix& q);

struct WielandtHoffman {
  double lhs = 0.0;  // ‖M − N‖²_F
  double rhs = 0.0;  // Σ (λ_i(M) − λ_i(N))², both descending
};
WielandtHoffman wielandt_hoffman_gap(const Matrix& m, const Matrix& n);

inline constexpr std::size_t kDefaultEnumerationCap = 6;
std::vector<EquilibriumElement> enumerate_equilibria(std::size_t n,
                                                     std::size_t cap = kDefaultEnumerationCap);

/// Uses the eigenvalues of A; the element is read in A's eigenbasis.
StabilityReport classify_equilibrium(const SpectralMatrix& a, const EquilibriumElement& eq);

struct NearestEquilibrium {
  EquilibriumElement element;  // in the eigenbasis of A
  Matrix realized;             // V·diag(ε)P in original coordinates
  double distance = 0.0;       // ‖Q − realized‖_F
};

/// Closest element of E = {V·D·P} to a square Q in Frobenius norm.
NearestEquilibrium nearest_equilibrium(const SpectralMatrix& a, const Matrix& q);

inline constexpr double kEquilibriumTol = 1e-9;
/// Distance test for n ≤ 5, off-diagonal test on QᵀAQ (in the eigenbasis) otherwise.
bool in_equilibrium_set(const SpectralMatrix& a, const Matrix& q, double tol = kEquilibriumTol);

}  // namespace ojaflow

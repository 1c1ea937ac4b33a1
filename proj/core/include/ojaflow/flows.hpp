#pragma once

#include <functional>
#include <vector>

#include "ojaflow/energy.hpp"
#include "ojaflow/linalg.hpp"
#include "ojaflow/matrix.hpp"
#include "ojaflow/stiefel.hpp"

namespace ojaflow {

/// Matrix X at base point Q with QᵀX + XᵀQ ≈ 0.
class TangentVector {
 public:
  static constexpr double kTangencyTol = 1e-10;

  TangentVector(const Matrix& base, Matrix x, double tol = kTangencyTol);

  const Matrix& base() const noexcept { return base_; }
  const Matrix& matrix() const noexcept { return x_; }

  /// ‖QᵀX + XᵀQ‖_F
  static double tangency_defect(const Matrix& base, const Matrix& x);

 private:
  Matrix base_;
  Matrix x_;
};

/// Caller-supplied rule Q ↦ S(Q) with S skew. Skewness is verified on every
/// evaluation; smoothness is the caller's promise. The rule must be safe to
/// call concurrently.
class SkewFieldSpec {
 public:
  using Rule = std::function<Matrix(const Matrix&)>;

  explicit SkewFieldSpec(Rule rule) : rule_(std::move(rule)) {}
  static SkewFieldSpec zero(std::size_t n);
  static SkewFieldSpec constant(Matrix s);

  Matrix operator()(const Matrix& q) const;

 private:
  Rule rule_;
};

/// Symmetric bilinear form on a tangent space.
using MetricEvaluator = std::function<double(const Matrix&, const Matrix&)>;
MetricEvaluator euclidean_metric();

// Unchecked kernels on raw matrices; the integrator and online code call
// these in tight loops. A is any symmetric matrix.
namespace fields {

/// Strictly-lower(M) − strictly-upper(M), M = QᵀΛQ.
Matrix sigma(const Matrix& lambda, const Matrix& q);
/// Q·Σ(A,Q)
Matrix sga(const Matrix& a, const Matrix& q);
/// Upper triangular T with AQ − QT equal to the SGA field.
Matrix t_matrix(const Matrix& a, const Matrix& q);
/// Column j: Aq_j − (q_j·Aq_j)q_j − 2 Σ_{i<j} (q_i·Aq_j) q_i.
Matrix componentwise(const Matrix& a, const Matrix& q);
/// ΛQ − QQᵀΛQ + QΣ(Λ,Q), evaluated literally.
Matrix sga_update(const Matrix& lambda, const Matrix& q);
/// AQN − QNQᵀAQ
Matrix brockett(const Matrix& a, const std::vector<double>& mu, const Matrix& q);
/// Euclidean derivative of the free energy −tr(NQᵀAQ): −2AQN.
Matrix free_energy_gradient(const Matrix& a, const std::vector<double>& mu, const Matrix& q);
Matrix llg_tildeg(const Matrix& a, const std::vector<double>& mu, const Matrix& s,
                  const Matrix& q);
Matrix llg_euclid(const Matrix& a, const std::vector<double>& mu, const Matrix& s,
                  const Matrix& q);
Matrix riccati(const Matrix& a, const Matrix& p);

}  // namespace fields

Matrix sigma_bracket(const SpectralMatrix& a, const Matrix& q);
TangentVector sga_field(const SpectralMatrix& a, const StiefelPoint& q);
Matrix componentwise_field(const SpectralMatrix& a, const StiefelPoint& q);
Matrix sga_update_field(const Matrix& lambda, const Matrix& q);
Matrix t_matrix(const SpectralMatrix& a, const StiefelPoint& q);
TangentVector brockett_field(const SpectralMatrix& a, const WeightVector& n,
                             const StiefelPoint& q);

/// ‖grad‖²·m1 − ⟨grad, m1⟩·grad under `inner`.
TangentVector hamiltonian_hat(const TangentVector& grad, const TangentVector& m1,
                              const MetricEvaluator& inner);

struct LlgField {
  TangentVector value;
  bool degenerate = false;  // Q was in E; value is the (vanishing) SGA field
};

LlgField llg_field_tildeg(const SpectralMatrix& a, const WeightVector& n,
                          const SkewFieldSpec& s, const StiefelPoint& q);
LlgField llg_field_euclid(const SpectralMatrix& a, const WeightVector& n,
                          const SkewFieldSpec& s, const StiefelPoint& q);

Matrix riccati_field(const SpectralMatrix& a, const Matrix& p);
/// e^{At}P0[I + (e^{2At} − I)P0]^{-1}e^{At}
Matrix riccati_closed_form(const SpectralMatrix& a, const Matrix& p0, double t);

/// The metric g̃ at Q. Throws degenerate when ⟨E′,F⟩ ≥ −1e−12·‖E′‖·‖F‖.
MetricEvaluator tildeg_metric(const SpectralMatrix& a, const WeightVector& n,
                              const StiefelPoint& q);
double metric_tildeg(const TangentVector& x, const TangentVector& y, const SpectralMatrix& a,
                     const WeightVector& n, const StiefelPoint& q);

/// ½(M − QMᵀQ)
TangentVector tangent_projection(const Matrix& m, const StiefelPoint& q);

}  // namespace ojaflow

#include "ojaflow/flows.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ojaflow/error.hpp"

namespace ojaflow {

TangentVector::TangentVector(const Matrix& base, Matrix x, double tol)
    : base_(base), x_(std::move(x)) {
  if (base_.rows() != x_.rows() || base_.cols() != x_.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "tangent vector shape differs from base point");
  }
  const double d = tangency_defect(base_, x_);
  if (!(d <= tol * std::max(1.0, x_.frobenius_norm()))) {
    throw Error(ErrorCode::invalid_argument,
                "not tangent: ||Q^T X + X^T Q||_F = " + std::to_string(d));
  }
}

double TangentVector::tangency_defect(const Matrix& base, const Matrix& x) {
  const Matrix w = base.transpose() * x;
  return (w + w.transpose()).frobenius_norm();
}

SkewFieldSpec SkewFieldSpec::zero(std::size_t n) {
  return SkewFieldSpec([n](const Matrix&) { return Matrix(n, n); });
}

SkewFieldSpec SkewFieldSpec::constant(Matrix s) {
  return SkewFieldSpec([s = std::move(s)](const Matrix&) { return s; });
}

Matrix SkewFieldSpec::operator()(const Matrix& q) const {
  Matrix s = rule_(q);
  if (!s.is_square() || s.rows() != q.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "S(Q) must be p x p");
  }
  const double d = (s + s.transpose()).frobenius_norm();
  if (!(d <= 1e-12 * std::max(1.0, s.frobenius_norm()))) {
    throw Error(ErrorCode::invalid_argument,
                "S(Q) is not skew-symmetric: ||S + S^T||_F = " + std::to_string(d));
  }
  return s;
}

MetricEvaluator euclidean_metric() {
  return [](const Matrix& x, const Matrix& y) { return frobenius_inner(x, y); };
}

namespace {

void require_compatible(const Matrix& a, const Matrix& q) {
  if (!a.is_square() || a.rows() != q.rows()) {
    throw Error(ErrorCode::dimension_mismatch,
                "A is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                    " but Q has " + std::to_string(q.rows()) + " rows");
  }
}

void require_square(const Matrix& q, const char* op) {
  if (!q.is_square()) {
    throw Error(ErrorCode::dimension_mismatch,
                std::string(op) + " needs square Q; use componentwise_field for p < n");
  }
}

}  // namespace

namespace fields {

Matrix sigma(const Matrix& lambda, const Matrix& q) {
  // Keep the lower triangle of QᵀΛQ and mirror it with a sign flip, so the
  // result is exactly skew even though the computed product is not exactly
  // symmetric.
  Matrix m = q.transpose() * lambda * q;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    m(i, i) = 0.0;
    for (std::size_t j = 0; j < i; ++j) m(j, i) = -m(i, j);
  }
  return m;
}

Matrix sga(const Matrix& a, const Matrix& q) { return q * sigma(a, q); }

Matrix t_matrix(const Matrix& a, const Matrix& q) {
  Matrix m = q.transpose() * a * q;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (i > j) m(i, j) = 0.0;
      else if (i < j) m(i, j) = 2.0 * m(i, j);
    }
  return m;
}

Matrix componentwise(const Matrix& a, const Matrix& q) {
  const std::size_t n = q.rows();
  const std::size_t p = q.cols();
  const Matrix aq = a * q;
  Matrix out(n, p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t r = 0; r < n; ++r) out(r, j) = aq(r, j);
    for (std::size_t i = 0; i <= j; ++i) {
      double c = 0.0;
      for (std::size_t r = 0; r < n; ++r) c += q(r, i) * aq(r, j);
      if (i < j) c *= 2.0;
      for (std::size_t r = 0; r < n; ++r) out(r, j) -= c * q(r, i);
    }
  }
  return out;
}

Matrix sga_update(const Matrix& lambda, const Matrix& q) {
  const Matrix lq = lambda * q;
  return lq - q * (q.transpose() * lq) + q * sigma(lambda, q);
}

Matrix brockett(const Matrix& a, const std::vector<double>& mu, const Matrix& q) {
  const Matrix aqn = scale_cols(a * q, mu);
  return aqn - q * (aqn.transpose() * q);
}

Matrix free_energy_gradient(const Matrix& a, const std::vector<double>& mu, const Matrix& q) {
  return scale_cols(a * q, mu) * -2.0;
}

namespace {

Matrix combine(const Matrix& base, double c1, const Matrix& qs, double c2) {
  Matrix out = base;
  auto o = out.data();
  auto b = base.data();
  auto h = qs.data();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = (b[k] + c1 * h[k]) - c2 * b[k];
  return out;
}

}  // namespace

Matrix llg_tildeg(const Matrix& a, const std::vector<double>& mu, const Matrix& s,
                  const Matrix& q) {
  const Matrix f = sga(a, q);
  const Matrix qs = q * s;
  const Matrix g = scale_cols(a * q, mu) * 2.0;  // −E′
  // Under g̃ these are ‖F‖² and ⟨F, QS⟩ (compatibility with E′).
  const double c1 = frobenius_inner(g, f);
  const double c2 = frobenius_inner(g, qs);
  return combine(f, c1, qs, c2);
}

Matrix llg_euclid(const Matrix& a, const std::vector<double>& mu, const Matrix& s,
                  const Matrix& q) {
  const Matrix b = brockett(a, mu, q);
  const Matrix qs = q * s;
  return combine(b, frobenius_inner(b, b), qs, frobenius_inner(b, qs));
}

Matrix riccati(const Matrix& a, const Matrix& p) {
  const Matrix ap = a * p;
  Matrix out = ap + ap.transpose() - 2.0 * (p * ap);
  return symmetric_part(out);
}

}  // namespace fields

Matrix sigma_bracket(const SpectralMatrix& a, const Matrix& q) {
  require_compatible(a.matrix(), q);
  return fields::sigma(a.matrix(), q);
}

TangentVector sga_field(const SpectralMatrix& a, const StiefelPoint& q) {
  require_square(q.matrix(), "sga_field");
  require_compatible(a.matrix(), q.matrix());
  return TangentVector(q.matrix(), fields::sga(a.matrix(), q.matrix()));
}

Matrix componentwise_field(const SpectralMatrix& a, const StiefelPoint& q) {
  require_compatible(a.matrix(), q.matrix());
  return fields::componentwise(a.matrix(), q.matrix());
}

Matrix sga_update_field(const Matrix& lambda, const Matrix& q) {
  require_symmetric(lambda);
  require_compatible(lambda, q);
  return fields::sga_update(lambda, q);
}

Matrix t_matrix(const SpectralMatrix& a, const StiefelPoint& q) {
  require_square(q.matrix(), "t_matrix");
  require_compatible(a.matrix(), q.matrix());
  return fields::t_matrix(a.matrix(), q.matrix());
}

TangentVector brockett_field(const SpectralMatrix& a, const WeightVector& n,
                             const StiefelPoint& q) {
  require_square(q.matrix(), "brockett_field");
  require_compatible(a.matrix(), q.matrix());
  if (n.n() != q.n()) throw Error(ErrorCode::dimension_mismatch, "weight count != n");
  return TangentVector(q.matrix(), fields::brockett(a.matrix(), n.values(), q.matrix()));
}

TangentVector hamiltonian_hat(const TangentVector& grad, const TangentVector& m1,
                              const MetricEvaluator& inner) {
  if (!(grad.base() == m1.base())) {
    throw Error(ErrorCode::invalid_argument, "hamiltonian_hat: tangent vectors at different base points");
  }
  const double gg = inner(grad.matrix(), grad.matrix());
  const double gm = inner(grad.matrix(), m1.matrix());
  return TangentVector(grad.base(), gg * m1.matrix() - gm * grad.matrix());
}

LlgField llg_field_tildeg(const SpectralMatrix& a, const WeightVector& n,
                          const SkewFieldSpec& s, const StiefelPoint& q) {
  require_square(q.matrix(), "llg_field_tildeg");
  require_compatible(a.matrix(), q.matrix());
  if (in_equilibrium_set(a, q.matrix())) {
    return {TangentVector(q.matrix(), fields::sga(a.matrix(), q.matrix())), true};
  }
  return {TangentVector(q.matrix(),
                        fields::llg_tildeg(a.matrix(), n.values(), s(q.matrix()), q.matrix())),
          false};
}

LlgField llg_field_euclid(const SpectralMatrix& a, const WeightVector& n,
                          const SkewFieldSpec& s, const StiefelPoint& q) {
  require_square(q.matrix(), "llg_field_euclid");
  require_compatible(a.matrix(), q.matrix());
  if (in_equilibrium_set(a, q.matrix())) {
    return {TangentVector(q.matrix(), fields::brockett(a.matrix(), n.values(), q.matrix())),
            true};
  }
  return {TangentVector(q.matrix(),
                        fields::llg_euclid(a.matrix(), n.values(), s(q.matrix()), q.matrix())),
          false};
}

Matrix riccati_field(const SpectralMatrix& a, const Matrix& p) {
  require_symmetric(p, 1e-10);
  require_compatible(a.matrix(), p);
  return fields::riccati(a.matrix(), p);
}

Matrix riccati_closed_form(const SpectralMatrix& a, const Matrix& p0, double t) {
  require_symmetric(p0, 1e-10);
  require_compatible(a.matrix(), p0);
  if (t == 0.0) return p0;
  const std::size_t n = a.n();
  const Matrix id = Matrix::identity(n);

  // Invertible P0: P(t) = [I + e^{−At}(P0⁻¹ − I)e^{−At}]⁻¹, which never forms e^{2At}.
  const EigenDecomposition ed = sym_eigendecomposition(p0);
  const double top = std::max(std::abs(ed.values.front()), std::abs(ed.values.back()));
  if (ed.values.back() > 1e-8 * top) {
    std::vector<double> inv(n);
    for (std::size_t i = 0; i < n; ++i) inv[i] = 1.0 / ed.values[i];
    const Matrix p0_inv = scale_cols(ed.vectors, inv) * ed.vectors.transpose();
    const Matrix em = matrix_exp_scaled(a, -t);
    const Matrix inner = id + em * (p0_inv - id) * em;
    return symmetric_part(inverse(inner));
  }

  const Matrix e1 = matrix_exp_scaled(a, t);
  const Matrix e2 = matrix_exp_scaled(a, 2.0 * t);
  const Matrix x = id + (e2 - id) * p0;
  Matrix p0_xinv;
  try {
    p0_xinv = solve(x.transpose(), p0.transpose()).transpose();  // P0·X⁻¹
  } catch (const Error& e) {
    if (e.code() != ErrorCode::singular) throw;
    throw Error(ErrorCode::singular,
                "I + (e^{2At} - I)P0 is singular; P0 is not a valid start", e.index());
  }
  return symmetric_part(e1 * p0_xinv * e1);
}

MetricEvaluator tildeg_metric(const SpectralMatrix& a, const WeightVector& n,
                              const StiefelPoint& q) {
  require_square(q.matrix(), "metric_tildeg");
  require_compatible(a.matrix(), q.matrix());
  Matrix ep = fields::free_energy_gradient(a.matrix(), n.values(), q.matrix());
  Matrix f = fields::sga(a.matrix(), q.matrix());
  const double ef = frobenius_inner(ep, f);
  if (!(ef < -1e-12 * ep.frobenius_norm() * f.frobenius_norm())) {
    throw Error(ErrorCode::degenerate,
                "metric undefined: <E', F> = " + std::to_string(ef) + " is not negative");
  }
  return [ep = std::move(ep), f = std::move(f), ef](const Matrix& x, const Matrix& y) {
    const double ex = frobenius_inner(ep, x);
    const double ey = frobenius_inner(ep, y);
    const Matrix x0 = x - (ex / ef) * f;
    const Matrix y0 = y - (ey / ef) * f;
    return frobenius_inner(x0, y0) - ex * ey / ef;
  };
}

double metric_tildeg(const TangentVector& x, const TangentVector& y, const SpectralMatrix& a,
                     const WeightVector& n, const StiefelPoint& q) {
  return tildeg_metric(a, n, q)(x.matrix(), y.matrix());
}

TangentVector tangent_projection(const Matrix& m, const StiefelPoint& q) {
  require_square(q.matrix(), "tangent_projection");
  const Matrix& qm = q.matrix();
  if (m.rows() != qm.rows() || m.cols() != qm.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "tangent_projection: shape mismatch");
  }
  return TangentVector(qm, 0.5 * (m - qm * m.transpose() * qm));
}

}  // namespace ojaflow

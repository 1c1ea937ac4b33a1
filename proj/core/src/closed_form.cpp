#include "ojaflow/closed_form.hpp"

#include <cmath>
#include <string>

#include "ojaflow/error.hpp"

namespace ojaflow {

namespace {

double spread(const SpectralMatrix& a) {
  return a.eigenvalues().front() - a.eigenvalues().back();
}

double midpoint(const SpectralMatrix& a) {
  return 0.5 * (a.eigenvalues().front() + a.eigenvalues().back());
}

}  // namespace

namespace {

struct Advance {
  Matrix q;  // Q(h), orthonormal
  Matrix g;  // upper triangular with Q(h) = e^{(A−cI)h}·Q·g
};

// One exact sub-step of the shifted flow map. The SGA flow is invariant under
// A → A − cI on O(n), and with c the spectral midpoint every exponential stays
// within e^{±spread·h}. The formula is orthogonal only for exactly orthogonal
// input, so a Gram–Schmidt pass (folded into g) stops rounding drift from being
// amplified by later sub-steps.
Advance advance(const SpectralMatrix& a, double c, const Matrix& q, double h) {
  const Matrix e_half = a.apply([&](double l) { return std::exp((l - c) * h); });
  const Matrix e_minus2 = a.apply([&](double l) { return std::exp(-2.0 * (l - c) * h); });
  const Matrix g = ul_factor(symmetric_part(q.transpose() * e_minus2 * q)).matrix();
  QRFactors qr = gram_schmidt_qr(e_half * q * g);
  return {std::move(qr.q), g * inverse(qr.r)};
}

std::size_t substeps(double exponent) {
  return exponent <= ClosedFormSolution::kStepExponent
             ? 1
             : static_cast<std::size_t>(std::ceil(exponent / ClosedFormSolution::kStepExponent));
}

}  // namespace

UpperTriangularFactor g_factor(const SpectralMatrix& a, const Matrix& q0, double t,
                               double budget) {
  if (!std::isfinite(t)) throw Error(ErrorCode::invalid_argument, "t must be finite");
  if (q0.rows() != a.n() || !q0.is_square()) {
    throw Error(ErrorCode::dimension_mismatch, "Q0 must be n x n");
  }
  const double exponent = 2.0 * spread(a) * std::abs(t);
  if (exponent > budget) {
    const double advised = budget / (2.0 * spread(a));
    throw Error(ErrorCode::conditioning,
                "2(l1 - ln)|t| = " + std::to_string(exponent) + " exceeds the budget " +
                    std::to_string(budget) + "; advised |t| <= " + std::to_string(advised),
                std::nullopt, advised);
  }
  if (t == 0.0) return UpperTriangularFactor(Matrix::identity(a.n()));
  // G(t+s) = G(t)·G_{Q(t)}(s): multiply the factors of well-conditioned
  // sub-steps instead of factoring Q0ᵀe^{−2At}Q0 in one go.
  const double c = midpoint(a);
  const std::size_t steps = substeps(exponent);
  const double h = t / static_cast<double>(steps);
  Matrix q = q0;
  Matrix g = Matrix::identity(a.n());
  for (std::size_t s = 0; s < steps; ++s) {
    Advance adv = advance(a, c, q, h);
    g = g * adv.g;
    q = std::move(adv.q);
  }
  g *= std::exp(-c * t);
  return UpperTriangularFactor(std::move(g));
}

const char* to_string(ClosedFormMethod m) noexcept {
  return m == ClosedFormMethod::ul_direct ? "ul_direct" : "ul_composed";
}

ClosedFormSolution::ClosedFormSolution(SpectralMatrix a, StiefelPoint q0)
    : a_(std::move(a)), q0_(std::move(q0)), exponent_(2.0 * spread(a_)), shift_(midpoint(a_)) {
  if (!q0_.is_square() || q0_.n() != a_.n()) {
    throw Error(ErrorCode::dimension_mismatch, "closed form needs square Q0 matching A");
  }
}

ClosedFormMethod ClosedFormSolution::method_for(double t) const noexcept {
  return substeps(exponent_ * std::abs(t)) == 1 ? ClosedFormMethod::ul_direct
                                                : ClosedFormMethod::ul_composed;
}

StiefelPoint ClosedFormSolution::evaluate(double t) const {
  if (!std::isfinite(t)) throw Error(ErrorCode::invalid_argument, "t must be finite");
  if (t == 0.0) return q0_;
  const std::size_t steps = substeps(exponent_ * std::abs(t));
  const double h = t / static_cast<double>(steps);
  Matrix q = q0_.matrix();
  for (std::size_t s = 0; s < steps; ++s) q = advance(a_, shift_, q, h).q;
  return StiefelPoint(std::move(q));
}

StiefelPoint closed_form_Q(const SpectralMatrix& a, const StiefelPoint& q0, double t) {
  return ClosedFormSolution(a, q0).evaluate(t);
}

std::vector<double> diag_consistency_check(const SpectralMatrix& a, const Trajectory& traj) {
  if (traj.empty()) throw Error(ErrorCode::invalid_argument, "empty trajectory");
  const double t = traj.back().t - traj.front().t;
  const std::size_t n = a.n();
  if (t > 0.0 && traj.samples.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "need at least two samples for quadrature");
  }
  const Matrix& am = a.matrix();
  auto integrand = [&](const Matrix& q, std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double aqi = 0.0;
      for (std::size_t l = 0; l < n; ++l) aqi += am(i, l) * q(l, k);
      s += q(i, k) * aqi;
    }
    return s;
  };
  std::vector<double> integral(n, 0.0);
  for (std::size_t s = 1; s < traj.samples.size(); ++s) {
    const auto& p = traj.samples[s - 1];
    const auto& c = traj.samples[s];
    const double dt = c.t - p.t;
    for (std::size_t k = 0; k < n; ++k)
      integral[k] += 0.5 * dt * (integrand(p.q, k) + integrand(c.q, k));
  }
  const UpperTriangularFactor g = g_factor(a, traj.front().q, t);
  std::vector<double> res(n);
  for (std::size_t k = 0; k < n; ++k) res[k] = std::abs(g(k, k) - std::exp(-integral[k]));
  return res;
}

}  // namespace ojaflow

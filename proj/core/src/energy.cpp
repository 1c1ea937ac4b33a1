#include "ojaflow/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ojaflow/error.hpp"

namespace ojaflow {

WeightVector::WeightVector(std::vector<double> mu, double min_gap) : mu_(std::move(mu)) {
  if (mu_.empty()) throw Error(ErrorCode::invalid_argument, "empty weight vector");
  for (std::size_t i = 0; i < mu_.size(); ++i) {
    if (!std::isfinite(mu_[i])) throw Error(ErrorCode::invalid_argument, "non-finite weight", i);
  }
  for (std::size_t i = 0; i + 1 < mu_.size(); ++i) {
    if (mu_[i] - mu_[i + 1] < min_gap) {
      throw Error(ErrorCode::invalid_argument,
                  "weights must be strictly decreasing (positions " + std::to_string(i + 1) +
                      ", " + std::to_string(i + 2) + ")",
                  i);
    }
  }
}

WeightVector WeightVector::defaults(std::size_t n) {
  std::vector<double> mu(n);
  for (std::size_t i = 0; i < n; ++i) mu[i] = static_cast<double>(n - i);
  return WeightVector(std::move(mu));
}

Matrix EquilibriumElement::matrix() const {
  const std::size_t n = row_of.size();
  Matrix m(n, n);
  for (std::size_t j = 0; j < n; ++j) m(row_of[j], j) = static_cast<double>(sign[j]);
  return m;
}

bool EquilibriumElement::is_identity_permutation() const {
  for (std::size_t j = 0; j < row_of.size(); ++j)
    if (row_of[j] != j) return false;
  return true;
}

double rayleigh(const Matrix& a, const Matrix& q) { return (q.transpose() * a * q).trace(); }

double weighted_rayleigh(const Matrix& a, const WeightVector& n, const Matrix& q) {
  if (q.cols() > n.n()) throw Error(ErrorCode::dimension_mismatch, "too few weights");
  const Matrix aq = a * q;
  double e = 0.0;
  for (std::size_t j = 0; j < q.cols(); ++j) {
    double d = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i) d += q(i, j) * aq(i, j);
    e += n.values()[j] * d;
  }
  return e;
}

double max_weighted_rayleigh(const SpectralMatrix& a, const WeightVector& n) {
  const auto& l = a.eigenvalues();
  double s = 0.0;
  for (std::size_t i = 0; i < std::min(l.size(), n.n()); ++i) s += n.values()[i] * l[i];
  return s;
}

double lyapunov_derivative(const Matrix& a, const WeightVector& n, const Matrix& q) {
  const Matrix m = q.transpose() * a * q;
  const auto& mu = n.values();
  double s = 0.0;
  for (std::size_t k = 0; k < m.rows(); ++k)
    for (std::size_t j = k + 1; j < m.cols(); ++j) s += (mu[k] - mu[j]) * m(k, j) * m(k, j);
  return -2.0 * s;
}

WielandtHoffman wielandt_hoffman_gap(const Matrix& m, const Matrix& n) {
  require_symmetric(m);
  require_symmetric(n);
  if (m.rows() != n.rows()) throw Error(ErrorCode::dimension_mismatch, "size mismatch");
  const Matrix d = m - n;
  const auto em = sym_eigendecomposition(m).values;
  const auto en = sym_eigendecomposition(n).values;
  WielandtHoffman out;
  out.lhs = frobenius_inner(d, d);
  for (std::size_t i = 0; i < em.size(); ++i) out.rhs += (em[i] - en[i]) * (em[i] - en[i]);
  return out;
}

std::vector<EquilibriumElement> enumerate_equilibria(std::size_t n, std::size_t cap) {
  if (n == 0) throw Error(ErrorCode::invalid_argument, "n must be positive");
  if (n > cap) {
    throw Error(ErrorCode::invalid_argument,
                "enumeration of 2^n n! equilibria refused above n = " + std::to_string(cap));
  }
  std::vector<EquilibriumElement> out;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  do {
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      EquilibriumElement e{perm, std::vector<int>(n)};
      for (std::size_t j = 0; j < n; ++j) e.sign[j] = (mask >> j) & 1U ? -1 : 1;
      out.push_back(std::move(e));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

StabilityReport classify_equilibrium(const SpectralMatrix& a, const EquilibriumElement& eq) {
  const auto& l = a.eigenvalues();
  const std::size_t n = eq.n();
  if (n != l.size()) throw Error(ErrorCode::dimension_mismatch, "equilibrium size mismatch");
  StabilityReport r{eq, std::vector<std::vector<double>>(n, std::vector<double>(n)), true};
  const double margin = 1e-12 * l.front();
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t tj = eq.row_of[j];
    for (std::size_t i = 0; i < n; ++i) {
      double b = 0.0;
      if (i == tj) {
        b = -2.0 * l[tj];
      } else if (i < j) {
        b = -l[tj] - l[i];
      } else {
        b = l[i] - l[tj];
      }
      r.eigenvalues[j][i] = b;
      if (!(b < -margin)) r.stable = false;
    }
  }
  return r;
}

namespace {

double score(const Matrix& w, const std::vector<std::size_t>& row_of) {
  double s = 0.0;
  for (std::size_t j = 0; j < row_of.size(); ++j) s += std::abs(w(row_of[j], j));
  return s;
}

}  // namespace

NearestEquilibrium nearest_equilibrium(const SpectralMatrix& a, const Matrix& q) {
  const std::size_t n = a.n();
  if (q.rows() != n || q.cols() != n) {
    throw Error(ErrorCode::dimension_mismatch, "nearest_equilibrium needs a square n x n Q");
  }
  const Matrix w = a.is_diagonal() ? q : a.eigenvectors().transpose() * q;

  // For orthogonal W, ‖W − DP‖² = 2n − 2 Σ_j |w_{τ(j), j}|, so maximize the sum.
  std::vector<std::size_t> best(n);
  std::vector<bool> used(n, false);
  bool is_perm = true;
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(w(i, j)) > std::abs(w(arg, j))) arg = i;
    best[j] = arg;
    if (used[arg]) is_perm = false;
    used[arg] = true;
  }
  if (!is_perm) {
    if (n <= 8) {
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      double top = -1.0;
      do {
        const double s = score(w, perm);
        if (s > top) {
          top = s;
          best = perm;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
      // Greedy: repeatedly take the largest remaining |w_ij|.
      std::fill(used.begin(), used.end(), false);
      std::vector<bool> col_done(n, false);
      for (std::size_t step = 0; step < n; ++step) {
        double top = -1.0;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (used[i]) continue;
          for (std::size_t j = 0; j < n; ++j) {
            if (col_done[j]) continue;
            if (std::abs(w(i, j)) > top) {
              top = std::abs(w(i, j));
              bi = i;
              bj = j;
            }
          }
        }
        used[bi] = true;
        col_done[bj] = true;
        best[bj] = bi;
      }
    }
  }

  NearestEquilibrium out;
  out.element.row_of = best;
  out.element.sign.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.element.sign[j] = w(best[j], j) < 0.0 ? -1 : 1;
  const Matrix dp = out.element.matrix();
  out.realized = a.is_diagonal() ? dp : a.eigenvectors() * dp;
  out.distance = (q - out.realized).frobenius_norm();
  return out;
}

bool in_equilibrium_set(const SpectralMatrix& a, const Matrix& q, double tol) {
  const std::size_t n = a.n();
  if (n <= 5) return nearest_equilibrium(a, q).distance <= tol;
  const Matrix w = a.is_diagonal() ? q : a.eigenvectors().transpose() * q;
  const Matrix lam = Matrix::diagonal(a.eigenvalues());
  const Matrix m = w.transpose() * lam * w;
  double off = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) off += m(i, j) * m(i, j);
  return std::sqrt(off) < tol;
}

}  // namespace ojaflow

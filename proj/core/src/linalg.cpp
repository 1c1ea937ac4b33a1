#include "ojaflow/linalg.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <string>

#include "ojaflow/error.hpp"

namespace ojaflow {

void require_symmetric(const Matrix& s, double tol) {
  if (!s.is_square()) {
    throw Error(ErrorCode::dimension_mismatch, "expected a square matrix");
  }
  const double defect = symmetry_defect(s);
  if (defect > tol * s.frobenius_norm()) {
    throw Error(ErrorCode::not_symmetric,
                "matrix is not symmetric: ||S - S^T||_F = " + std::to_string(defect));
  }
}

EigenDecomposition sym_eigendecomposition(const Matrix& s, int max_sweeps) {
  require_symmetric(s);
  const std::size_t n = s.rows();
  Matrix a = symmetric_part(s);
  Matrix v = Matrix::identity(n);

  auto off_norm = [&] {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) sum += a(i, j) * a(i, j);
    return std::sqrt(sum);
  };

  const double threshold = 1e-14 * s.frobenius_norm();
  int sweep = 0;
  while (off_norm() > threshold) {
    if (sweep++ >= max_sweeps) {
      throw Error(ErrorCode::no_convergence,
                  "Jacobi eigensolver did not converge in " + std::to_string(max_sweeps) +
                      " sweeps");
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.values[c] = a(src, src);
    std::size_t big = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v(k, src)) > std::abs(v(big, src))) big = k;
    const double sgn = v(big, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = sgn * v(k, src);
  }
  return out;
}

// ---------------------------------------------------------------------------

SpectralMatrix::SpectralMatrix(Matrix a, std::vector<double> lambda, Matrix v, bool diagonal)
    : a_(std::move(a)), lambda_(std::move(lambda)), v_(std::move(v)), diagonal_(diagonal) {}

namespace {

void check_spectrum(std::span<const double> lambda, double min_gap) {
  if (lambda.empty()) throw Error(ErrorCode::invalid_argument, "empty spectrum");
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (!std::isfinite(lambda[i])) {
      throw Error(ErrorCode::invalid_argument, "non-finite eigenvalue", i);
    }
  }
  for (std::size_t i = 0; i + 1 < lambda.size(); ++i) {
    if (lambda[i] - lambda[i + 1] < min_gap) {
      throw Error(ErrorCode::invalid_argument,
                  "eigenvalues must be strictly descending with gap >= " +
                      std::to_string(min_gap) + " (violated between positions " +
                      std::to_string(i + 1) + " and " + std::to_string(i + 2) + ")",
                  i);
    }
  }
  if (lambda.back() <= 0.0) {
    throw Error(ErrorCode::invalid_argument, "eigenvalues must be positive",
                lambda.size() - 1);
  }
}

}  // namespace

SpectralMatrix SpectralMatrix::from_matrix(const Matrix& a, double min_gap) {
  EigenDecomposition ed = sym_eigendecomposition(a);
  check_spectrum(ed.values, min_gap);
  const bool diag = ed.vectors == Matrix::identity(a.rows());
  return SpectralMatrix(symmetric_part(a), std::move(ed.values), std::move(ed.vectors), diag);
}

SpectralMatrix SpectralMatrix::diagonal(std::span<const double> lambda, double min_gap) {
  check_spectrum(lambda, min_gap);
  std::vector<double> l(lambda.begin(), lambda.end());
  return SpectralMatrix(Matrix::diagonal(l), l, Matrix::identity(l.size()), true);
}

Matrix SpectralMatrix::apply(const std::function<double(double)>& f) const {
  std::vector<double> fl(lambda_.size());
  std::transform(lambda_.begin(), lambda_.end(), fl.begin(), f);
  if (diagonal_) return Matrix::diagonal(fl);
  return scale_cols(v_, fl) * v_.transpose();
}

Matrix matrix_exp_scaled(const SpectralMatrix& a, double t) {
  if (!std::isfinite(t)) throw Error(ErrorCode::invalid_argument, "t must be finite");
  const double log_max = std::log(DBL_MAX);
  double worst = 0.0;
  double scale = 0.0;
  for (double l : a.eigenvalues()) {
    worst = std::max(worst, l * t);
    scale = std::max(scale, std::abs(l));
  }
  if (worst > log_max) {
    const double advised = log_max / scale;
    throw Error(ErrorCode::overflow,
                "e^{At} overflows: max lambda*t = " + std::to_string(worst) +
                    "; advised |t| <= " + std::to_string(advised),
                std::nullopt, advised);
  }
  return a.apply([t](double l) { return std::exp(l * t); });
}

// ---------------------------------------------------------------------------

UpperTriangularFactor::UpperTriangularFactor(Matrix g) : g_(std::move(g)) {
  if (!g_.is_square()) throw Error(ErrorCode::dimension_mismatch, "factor must be square");
  for (std::size_t l = 0; l < g_.rows(); ++l) {
    for (std::size_t k = 0; k < l; ++k) {
      if (g_(l, k) != 0.0) {
        throw Error(ErrorCode::invalid_argument, "factor has a nonzero strictly-lower entry", l);
      }
    }
    if (!(g_(l, l) > 0.0)) {
      throw Error(ErrorCode::not_positive_definite, "factor diagonal must be positive", l);
    }
  }
}

Matrix cholesky_lower(const Matrix& b) {
  require_symmetric(b, 1e-10);
  const std::size_t n = b.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = b(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw Error(ErrorCode::not_positive_definite,
                  "Cholesky pivot " + std::to_string(j) + " is not positive (" +
                      std::to_string(d) + ")",
                  j);
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = b(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

UpperTriangularFactor ul_factor(const Matrix& b) {
  if (!b.is_square()) throw Error(ErrorCode::dimension_mismatch, "ul_factor: B must be square");
  const std::size_t n = b.rows();
  Matrix rev(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) rev(i, j) = b(n - 1 - i, n - 1 - j);
  Matrix l;
  try {
    l = cholesky_lower(rev);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::not_positive_definite) throw;
    const std::size_t pivot = n - 1 - *e.index();
    throw Error(ErrorCode::not_positive_definite,
                "UL factorization lost definiteness at pivot " + std::to_string(pivot), pivot);
  }
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g(i, j) = l(n - 1 - i, n - 1 - j);
  return UpperTriangularFactor(std::move(g));
}

// ---------------------------------------------------------------------------

QRFactors gram_schmidt_qr(const Matrix& m, double rel_tol) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  if (cols > rows) {
    throw Error(ErrorCode::rank_deficient, "more columns than rows; column " +
                                               std::to_string(rows + 1) + " must be dependent",
                rows);
  }
  Matrix q(rows, cols);
  Matrix r(cols, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    std::vector<double> v = m.column(j);
    const double norm0 = norm2(v);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        double c = 0.0;
        for (std::size_t k = 0; k < rows; ++k) c += q(k, i) * v[k];
        for (std::size_t k = 0; k < rows; ++k) v[k] -= c * q(k, i);
        r(i, j) += c;
      }
    }
    const double rho = norm2(v);
    if (!(rho > rel_tol * norm0) || !std::isfinite(rho)) {
      throw Error(ErrorCode::rank_deficient,
                  "column " + std::to_string(j + 1) + " is linearly dependent on earlier columns",
                  j);
    }
    r(j, j) = rho;
    for (std::size_t k = 0; k < rows; ++k) q(k, j) = v[k] / rho;
  }
  return {std::move(q), std::move(r)};
}

StiefelPoint gram_schmidt(const Matrix& m, double rel_tol) {
  return StiefelPoint(gram_schmidt_qr(m, rel_tol).q);
}

// ---------------------------------------------------------------------------

LUDecomposition lu_decompose(const Matrix& m) {
  if (!m.is_square()) throw Error(ErrorCode::dimension_mismatch, "LU requires a square matrix");
  const std::size_t n = m.rows();
  LUDecomposition out{m, std::vector<std::size_t>(n), 1, false};
  std::iota(out.perm.begin(), out.perm.end(), std::size_t{0});
  Matrix& a = out.lu;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(out.perm[k], out.perm[piv]);
      out.sign = -out.sign;
    }
    const double d = a(k, k);
    if (d == 0.0) {
      out.singular = true;
      continue;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / d;
      a(i, k) = f;
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return out;
}

double determinant(const Matrix& m) {
  if (m.rows() == 0 && m.cols() == 0) return 1.0;
  const LUDecomposition lu = lu_decompose(m);
  if (lu.singular) return 0.0;
  double d = lu.sign;
  for (std::size_t k = 0; k < m.rows(); ++k) d *= lu.lu(k, k);
  return d;
}

Matrix submatrix(const Matrix& m, std::span<const std::size_t> rows,
                 std::span<const std::size_t> cols) {
  auto check = [](std::span<const std::size_t> idx, std::size_t bound, const char* what) {
    std::vector<bool> seen(bound, false);
    for (std::size_t i : idx) {
      if (i >= bound) {
        throw Error(ErrorCode::invalid_argument,
                    std::string(what) + " index " + std::to_string(i) + " out of range", i);
      }
      if (seen[i]) {
        throw Error(ErrorCode::invalid_argument,
                    std::string(what) + " index " + std::to_string(i) + " repeated", i);
      }
      seen[i] = true;
    }
  };
  check(rows, m.rows(), "row");
  check(cols, m.cols(), "column");
  Matrix s(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) s(i, j) = m(rows[i], cols[j]);
  return s;
}

double submatrix_det(const Matrix& m, std::span<const std::size_t> rows,
                     std::span<const std::size_t> cols) {
  if (rows.size() != cols.size()) {
    throw Error(ErrorCode::dimension_mismatch,
                "submatrix_det: selection is " + std::to_string(rows.size()) + "x" +
                    std::to_string(cols.size()) + ", not square");
  }
  return determinant(submatrix(m, rows, cols));
}

Matrix solve(const Matrix& m, const Matrix& b) {
  if (m.rows() != b.rows()) throw Error(ErrorCode::dimension_mismatch, "solve: row mismatch");
  const std::size_t n = m.rows();
  const LUDecomposition lu = lu_decompose(m);
  double scale = 0.0;
  for (double v : m.data()) scale = std::max(scale, std::abs(v));
  const double tiny = static_cast<double>(n) * DBL_EPSILON * scale;
  for (std::size_t k = 0; k < n; ++k) {
    if (!(std::abs(lu.lu(k, k)) > tiny)) {
      throw Error(ErrorCode::singular, "matrix is singular to working precision", k);
    }
  }
  Matrix x(n, b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = b(lu.perm[i], c);
      for (std::size_t k = 0; k < i; ++k) s -= lu.lu(i, k) * y[k];
      y[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = y[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= lu.lu(ii, k) * x(k, c);
      x(ii, c) = s / lu.lu(ii, ii);
    }
  }
  return x;
}

Matrix inverse(const Matrix& m) { return solve(m, Matrix::identity(m.rows())); }

std::size_t numerical_rank(const Matrix& m, double rel_tol) {
  Matrix a = m;
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  const std::size_t steps = std::min(rows, cols);
  std::vector<double> diag;
  for (std::size_t k = 0; k < steps; ++k) {
    std::size_t best = k;
    double best_norm = -1.0;
    for (std::size_t j = k; j < cols; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < rows; ++i) s += a(i, j) * a(i, j);
      if (s > best_norm) {
        best_norm = s;
        best = j;
      }
    }
    if (best != k)
      for (std::size_t i = 0; i < rows; ++i) std::swap(a(i, k), a(i, best));
    const double alpha = std::sqrt(best_norm);
    diag.push_back(alpha);
    if (alpha == 0.0) break;
    // Householder reflector zeroing a(k+1.., k).
    std::vector<double> v(rows - k);
    for (std::size_t i = k; i < rows; ++i) v[i - k] = a(i, k);
    v[0] += (v[0] >= 0.0 ? alpha : -alpha);
    const double vnorm2 = dot(v, v);
    if (vnorm2 == 0.0) continue;
    for (std::size_t j = k; j < cols; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < rows; ++i) s += v[i - k] * a(i, j);
      const double f = 2.0 * s / vnorm2;
      for (std::size_t i = k; i < rows; ++i) a(i, j) -= f * v[i - k];
    }
  }
  if (diag.empty() || diag[0] == 0.0) return 0;
  std::size_t r = 0;
  for (double d : diag)
    if (d > rel_tol * diag[0]) ++r;
  return r;
}

}  // namespace ojaflow

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ojaflow/matrix.hpp"
#include "ojaflow/stiefel.hpp"

namespace ojaflow {

struct EigenDecomposition {
  std::vector<double> values;  // descending
  Matrix vectors;              // columns, orthonormal
};

inline constexpr double kSymmetryTol = 1e-12;

/// Throws not_symmetric when ‖S − Sᵀ‖_F > tol·‖S‖_F.
void require_symmetric(const Matrix& s, double tol = kSymmetryTol);

/// Cyclic Jacobi. Eigenvalues descending; each eigenvector is signed so its
/// largest-magnitude entry is positive.
EigenDecomposition sym_eigendecomposition(const Matrix& s, int max_sweeps = 100);

/// Symmetric A with strictly descending positive spectrum.
class SpectralMatrix {
 public:
  static constexpr double kDefaultMinGap = 1e-9;

  static SpectralMatrix from_matrix(const Matrix& a, double min_gap = kDefaultMinGap);
  /// diag(λ) with λ strictly descending; eigenvectors exactly I.
  static SpectralMatrix diagonal(std::span<const double> lambda,
                                 double min_gap = kDefaultMinGap);

  std::size_t n() const noexcept { return a_.rows(); }
  const Matrix& matrix() const noexcept { return a_; }
  const std::vector<double>& eigenvalues() const noexcept { return lambda_; }
  const Matrix& eigenvectors() const noexcept { return v_; }
  /// True when the eigenvector matrix is exactly the identity.
  bool is_diagonal() const noexcept { return diagonal_; }

  /// V·diag(f(λ))·Vᵀ, exactly diagonal when is_diagonal().
  Matrix apply(const std::function<double(double)>& f) const;

 private:
  SpectralMatrix(Matrix a, std::vector<double> lambda, Matrix v, bool diagonal);
  Matrix a_;
  std::vector<double> lambda_;
  Matrix v_;
  bool diagonal_ = false;
};

/// e^{At}. Throws overflow (with the largest admissible |t| as limit) when
/// λ·t would exceed log(DBL_MAX) for some eigenvalue.
Matrix matrix_exp_scaled(const SpectralMatrix& a, double t);

/// Upper-triangular factor with strictly positive diagonal.
class UpperTriangularFactor {
 public:
  explicit UpperTriangularFactor(Matrix g);
  const Matrix& matrix() const noexcept { return g_; }
  std::size_t n() const noexcept { return g_.rows(); }
  double operator()(std::size_t l, std::size_t k) const noexcept { return g_(l, k); }

 private:
  Matrix g_;
};

/// B = L·Lᵀ. Throws not_positive_definite with the failing pivot index.
Matrix cholesky_lower(const Matrix& b);

/// B = G·Gᵀ with G upper triangular, computed as J·chol(JBJ)·J.
UpperTriangularFactor ul_factor(const Matrix& b);

struct QRFactors {
  Matrix q;  // orthonormal columns
  Matrix r;  // upper triangular, positive diagonal
};

/// Modified Gram–Schmidt with one reorthogonalization pass. Throws
/// rank_deficient naming the first dependent column.
QRFactors gram_schmidt_qr(const Matrix& m, double rel_tol = 1e-12);
StiefelPoint gram_schmidt(const Matrix& m, double rel_tol = 1e-12);

struct LUDecomposition {
  Matrix lu;                       // unit-lower L below diagonal, U on and above
  std::vector<std::size_t> perm;   // row i of LU is row perm[i] of the input
  int sign = 1;
  bool singular = false;           // an exactly zero pivot was met
};

LUDecomposition lu_decompose(const Matrix& m);
double determinant(const Matrix& m);

/// det(M[rows; cols]) with 0-based index lists.
double submatrix_det(const Matrix& m, std::span<const std::size_t> rows,
                     std::span<const std::size_t> cols);
Matrix submatrix(const Matrix& m, std::span<const std::size_t> rows,
                 std::span<const std::size_t> cols);

/// Solves M·X = B. Throws singular when a pivot vanishes relative to ‖M‖.
Matrix solve(const Matrix& m, const Matrix& b);
Matrix inverse(const Matrix& m);

/// Rank via Householder QR with column pivoting; |r_kk| > rel_tol·|r_00|.
std::size_t numerical_rank(const Matrix& m, double rel_tol = 1e-9);

}  // namespace ojaflow

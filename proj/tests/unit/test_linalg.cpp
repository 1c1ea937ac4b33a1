#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "ojaflow/error.hpp"
#include "ojaflow/linalg.hpp"
#include "ojaflow/random.hpp"
#include "support/oracle.hpp"

using namespace ojaflow;
using oracle::to_eigen;

namespace {

bool is_upper(const Matrix& g) {
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (g(i, j) != 0.0) return false;
  return true;
}

Matrix taylor_exp(const Matrix& a, double t, int terms) {
  Matrix sum = Matrix::identity(a.rows());
  Matrix term = sum;
  for (int k = 1; k < terms; ++k) {
    term = term * a * (t / k);
    sum += term;
  }
  return sum;
}

}  // namespace

TEST_CASE("matrix basics") {
  const Matrix m{{1, 2, 3}, {4, 5, 6}};
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.transpose()(2, 1) == 6);
  CHECK(m.column(1) == std::vector<double>{2, 5});
  CHECK(m.leading_columns(2) == Matrix{{1, 2}, {4, 5}});
  CHECK(frobenius_inner(m, m) == doctest::Approx(91));
  CHECK(Matrix::identity(3).trace() == 3);
  const Matrix s = symmetric_part(Matrix{{0, 2}, {0, 0}}) + skew_part(Matrix{{0, 2}, {0, 0}});
  CHECK(s == Matrix{{0, 2}, {0, 0}});
  CHECK(orthogonality_defect(Matrix::identity(4)) == 0.0);
  CHECK(scale_rows(std::vector<double>{2, 3}, Matrix{{1, 1}, {1, 1}}) == Matrix{{2, 2}, {3, 3}});
  CHECK(scale_cols(Matrix{{1, 1}, {1, 1}}, std::vector<double>{2, 3}) == Matrix{{2, 3}, {2, 3}});
}

TEST_CASE("sym_eigendecomposition") {
  SUBCASE("identity") {
    const auto ed = sym_eigendecomposition(Matrix::identity(3));
    CHECK(ed.values == std::vector<double>{1, 1, 1});
    CHECK(max_abs_diff(ed.vectors, Matrix::identity(3)) == 0.0);
  }
  SUBCASE("already diagonal") {
    const auto ed = sym_eigendecomposition(Matrix{{3, 0}, {0, 1}});
    CHECK(ed.values == std::vector<double>{3, 1});
    CHECK(std::abs(ed.vectors(0, 0)) == 1.0);
    CHECK(std::abs(ed.vectors(1, 1)) == 1.0);
  }
  SUBCASE("random 6x6 reconstruction and Eigen agreement") {
    Rng rng(42);
    const Matrix s = random_symmetric(6, rng);
    const auto ed = sym_eigendecomposition(s);
    const Matrix rebuilt = ed.vectors * Matrix::diagonal(ed.values) * ed.vectors.transpose();
    CHECK((rebuilt - s).frobenius_norm() <= 1e-10);
    CHECK(orthogonality_defect(ed.vectors) <= 1e-12);
    const auto ref = oracle::eigenvalues(s);
    for (std::size_t i = 0; i < 6; ++i) CHECK(ed.values[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    CHECK(std::is_sorted(ed.values.rbegin(), ed.values.rend()));
  }
  SUBCASE("rejects non-symmetric input") {
    CHECK_THROWS_AS(sym_eigendecomposition(Matrix{{1, 2}, {0, 1}}), Error);
  }
}

TEST_CASE("eigenvalues are invariant under orthogonal similarity") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 6;
    const Matrix s = random_symmetric(n, rng);
    const Matrix u = random_orthogonal(n, rng);
    const auto a = sym_eigendecomposition(s).values;
    const auto b = sym_eigendecomposition(symmetric_part(u * s * u.transpose())).values;
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-9);
  }
}

TEST_CASE("SpectralMatrix validation") {
  CHECK_NOTHROW(SpectralMatrix::diagonal(std::vector<double>{4, 3, 2, 1}));
  CHECK_THROWS_AS(SpectralMatrix::diagonal(std::vector<double>{1, 2}), Error);
  CHECK_THROWS_AS(SpectralMatrix::diagonal(std::vector<double>{2, 2}), Error);
  CHECK_THROWS_AS(SpectralMatrix::diagonal(std::vector<double>{1, -1}), Error);
  const auto a = SpectralMatrix::diagonal(std::vector<double>{3, 1});
  CHECK(a.is_diagonal());
  Rng rng(3);
  const auto r = oracle::rotated_spectrum(4, rng);
  CHECK_FALSE(r.is_diagonal());
  CHECK(r.eigenvalues()[0] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("matrix_exp_scaled") {
  const auto d = SpectralMatrix::diagonal(std::vector<double>{2, 1});
  CHECK(matrix_exp_scaled(d, 0.0) == Matrix::identity(2));
  const Matrix e = matrix_exp_scaled(d, 1.0);
  CHECK(e(0, 0) == doctest::Approx(std::exp(2.0)).epsilon(1e-15));
  CHECK(e(1, 1) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(e(0, 1) == 0.0);

  Rng rng(5);
  const auto a = oracle::rotated_spectrum(5, rng);
  CHECK(max_abs_diff(matrix_exp_scaled(a, 0.0), Matrix::identity(5)) <= 1e-14);
  CHECK(max_abs_diff(matrix_exp_scaled(a, 0.3), taylor_exp(a.matrix(), 0.3, 20)) <= 1e-10);
  const Eigen::MatrixXd ref = (to_eigen(a.matrix()) * 0.3).exp();
  CHECK(max_abs_diff(matrix_exp_scaled(a, 0.3), oracle::from_eigen(ref)) <= 1e-10);

  SUBCASE("overflow reports the admissible horizon") {
    try {
      matrix_exp_scaled(d, 1e6);
      FAIL("expected overflow");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::overflow);
      REQUIRE(err.limit().has_value());
      CHECK(*err.limit() == doctest::Approx(std::log(std::numeric_limits<double>::max()) / 2.0));
    }
  }
}

TEST_CASE("ul_factor") {
  SUBCASE("identity") {
    CHECK(max_abs_diff(ul_factor(Matrix::identity(3)).matrix(), Matrix::identity(3)) == 0.0);
  }
  SUBCASE("2x2 by hand") {
    // g22² = 1, g12·g22 = 1, g11² + g12² = 2 with positive diagonal.
    const Matrix b{{2, 1}, {1, 1}};
    const Matrix g = ul_factor(b).matrix();
    CHECK(is_upper(g));
    CHECK(g(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(g(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(g(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(max_abs_diff(g * g.transpose(), b) <= 1e-12);
  }
  SUBCASE("reconstruction over seeded Q0 and t") {
    Rng rng(11);
    const auto a = oracle::diag_spectrum(4);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix q0 = random_orthogonal(4, rng);
      for (double t : {0.0, 0.5, 1.0, 2.0}) {
        const Matrix b = symmetric_part(q0.transpose() * matrix_exp_scaled(a, -2 * t) * q0);
        const Matrix g = ul_factor(b).matrix();
        CHECK(is_upper(g));
        for (std::size_t i = 0; i < 4; ++i) CHECK(g(i, i) > 0.0);
        CHECK((g * g.transpose() - b).frobenius_norm() <= 1e-9 * b.frobenius_norm());
      }
    }
  }
  SUBCASE("indefinite input names the pivot") {
    try {
      ul_factor(Matrix{{1, 0}, {0, -1}});
      FAIL("expected failure");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::not_positive_definite);
      CHECK(err.index().has_value());
    }
  }
}

TEST_CASE("gram_schmidt") {
  CHECK(max_abs_diff(gram_schmidt(Matrix::identity(4)).matrix(), Matrix::identity(4)) == 0.0);
  CHECK(max_abs_diff(gram_schmidt(Matrix{{1, 1}, {0, 1}}).matrix(), Matrix::identity(2)) <= 1e-15);

  Rng rng(9);
  const Matrix m = random_gaussian(5, 3, rng);
  const auto qr = gram_schmidt_qr(m);
  CHECK(orthogonality_defect(qr.q) <= 1e-12);
  CHECK(max_abs_diff(qr.q * qr.r, m) <= 1e-12);
  CHECK(is_upper(qr.r));
  // Same span and orientation as Eigen's Householder QR after sign fixing.
  Eigen::HouseholderQR<Eigen::MatrixXd> hh(to_eigen(m));
  Eigen::MatrixXd q = hh.householderQ() * Eigen::MatrixXd::Identity(5, 3);
  Eigen::MatrixXd r = hh.matrixQR().topRows(3).triangularView<Eigen::Upper>();
  for (int j = 0; j < 3; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  CHECK(max_abs_diff(qr.q, oracle::from_eigen(q)) <= 1e-12);

  SUBCASE("idempotent on orthonormal input") {
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix s = random_stiefel(6, 1 + trial % 6, rng);
      CHECK(max_abs_diff(gram_schmidt(s).matrix(), s) <= 1e-12);
    }
  }
  SUBCASE("rank deficiency names the column") {
    try {
      gram_schmidt(Matrix{{1, 2, 0}, {1, 2, 1}, {0, 0, 1}});
      FAIL("expected failure");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::rank_deficient);
      CHECK(err.index() == std::optional<std::size_t>(1));
    }
  }
}

TEST_CASE("StiefelPoint validates orthonormality") {
  CHECK_NOTHROW(StiefelPoint(Matrix::identity(3)));
  CHECK_THROWS_AS(StiefelPoint(Matrix::identity(3) * 2.0), Error);
  CHECK_THROWS_AS(StiefelPoint(Matrix(2, 3)), Error);
}

TEST_CASE("submatrix_det") {
  const std::vector<std::size_t> r12{0, 1};
  CHECK(submatrix_det(Matrix::identity(4), r12, r12) == 1.0);

  const Matrix m{{0, 1, 0}, {1, 0, 1}, {0, 1, 1}};
  CHECK(submatrix_det(m, r12, r12) == doctest::Approx(-1.0));
  const std::vector<std::size_t> c21{1, 0};
  CHECK(submatrix_det(m, r12, c21) == doctest::Approx(1.0));

  Rng rng(13);
  const Matrix g = random_gaussian(5, 5, rng);
  const std::vector<std::size_t> all{0, 1, 2, 3, 4};
  CHECK(submatrix_det(g, all, all) == doctest::Approx(oracle::det(g)).epsilon(1e-10));
  CHECK(determinant(g) == doctest::Approx(oracle::det(g)).epsilon(1e-10));

  SUBCASE("multilinear in rows") {
    for (int trial = 0; trial < 50; ++trial) {
      Matrix x = random_gaussian(5, 5, rng);
      const std::vector<std::size_t> rows{0, 2, 4};
      const std::vector<std::size_t> cols{1, 2, 3};
      const double before = submatrix_det(x, rows, cols);
      for (std::size_t j = 0; j < 5; ++j) x(2, j) *= 2.0;
      CHECK(submatrix_det(x, rows, cols) == doctest::Approx(2.0 * before).epsilon(1e-12));
    }
  }
}

TEST_CASE("solve, inverse and rank") {
  Rng rng(17);
  const Matrix m = random_gaussian(4, 4, rng);
  const Matrix inv = inverse(m);
  CHECK(max_abs_diff(m * inv, Matrix::identity(4)) <= 1e-10);
  CHECK(max_abs_diff(inv, oracle::from_eigen(to_eigen(m).inverse())) <= 1e-10);
  CHECK_THROWS_AS(solve(Matrix{{1, 2}, {2, 4}}, Matrix::identity(2)), Error);
  CHECK(numerical_rank(Matrix{{1, 2}, {2, 4}}) == 1);
  CHECK(numerical_rank(m) == 4);
  const Matrix low = random_gaussian(6, 2, rng) * random_gaussian(2, 6, rng);
  CHECK(numerical_rank(low) == 2);
  CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(to_eigen(low)).rank() == 2);
}

TEST_CASE("random generators") {
  Rng rng(19);
  CHECK(orthogonality_defect(random_orthogonal(7, rng)) <= 1e-12);
  CHECK(orthogonality_defect(random_stiefel(7, 3, rng)) <= 1e-12);
  CHECK(symmetry_defect(random_symmetric(5, rng)) == 0.0);
  const Matrix k = random_skew(5, rng);
  CHECK(max_abs_diff(k, -k.transpose()) == 0.0);
  const Matrix s = random_structured_orthogonal(5, rng);
  CHECK(orthogonality_defect(s) <= 1e-12);
  CHECK(s(0, 0) == 0.0);
  Rng a(1), b(1);
  CHECK(random_orthogonal(4, a) == random_orthogonal(4, b));
}

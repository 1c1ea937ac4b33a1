#include <doctest.h>

#include <cmath>

#include "ojaflow/energy.hpp"
#include "ojaflow/error.hpp"
#include "ojaflow/flows.hpp"
#include "ojaflow/random.hpp"
#include "support/oracle.hpp"

using namespace ojaflow;

namespace {

double skew_defect(const Matrix& q, const Matrix& x) {
  const Matrix m = q.transpose() * x;
  return (m + m.transpose()).frobenius_norm();
}

bool strictly_lower_zero(const Matrix& t) {
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (t(i, j) != 0.0) return false;
  return true;
}

// Σ computed straight from M = QᵀAQ, with Eigen doing the products.
Matrix sigma_oracle(const Matrix& a, const Matrix& q) {
  const Eigen::MatrixXd m = oracle::to_eigen(q).transpose() * oracle::to_eigen(a) * oracle::to_eigen(q);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i > j) s(i, j) = m(i, j);
      if (i < j) s(i, j) = -m(i, j);
    }
  return oracle::from_eigen(s);
}

}  // namespace

TEST_CASE("sigma_bracket") {
  const auto a2 = SpectralMatrix::diagonal(std::vector<double>{2, 1});
  CHECK(sigma_bracket(a2, Matrix::identity(2)) == Matrix(2, 2));

  const Matrix r = oracle::rotation(std::numbers::pi / 4);
  const Matrix s = sigma_bracket(a2, r);
  CHECK(s(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s(1, 0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(s(0, 0) == 0.0);

  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = oracle::rotated_spectrum(5, rng);
    const Matrix q = random_orthogonal(5, rng);
    const Matrix sb = sigma_bracket(a, q);
    CHECK((sb + sb.transpose()).frobenius_norm() <= 1e-12);
    CHECK(max_abs_diff(sb, sigma_oracle(a.matrix(), q)) <= 1e-12);
  }
}

TEST_CASE("sga_field") {
  const auto a4 = oracle::diag_spectrum(4);
  CHECK(sga_field(a4, StiefelPoint::identity(4)).matrix().frobenius_norm() == 0.0);

  const auto a2 = SpectralMatrix::diagonal(std::vector<double>{2, 1});
  const Matrix f = sga_field(a2, StiefelPoint(oracle::rotation(std::numbers::pi / 4))).matrix();
  CHECK(f(0, 0) == doctest::Approx(std::sqrt(2.0) / 4).epsilon(1e-15));
  CHECK(f(1, 0) == doctest::Approx(-std::sqrt(2.0) / 4).epsilon(1e-15));

  SUBCASE("vanishes on every signed permutation") {
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto a = oracle::diag_spectrum(n);
      for (const auto& eq : enumerate_equilibria(n)) {
        const StiefelPoint q(eq.matrix());
        CHECK(sga_field(a, q).matrix().frobenius_norm() <= 1e-13);
        CHECK(componentwise_field(a, q).frobenius_norm() <= 1e-13);
      }
    }
  }
  SUBCASE("nonzero off the equilibrium set") {
    Rng rng(22);
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = oracle::diag_spectrum(4);
      const StiefelPoint q(random_orthogonal(4, rng));
      CHECK(sga_field(a, q).matrix().frobenius_norm() > 1e-6);
    }
  }
}

TEST_CASE("three forms of the SGA field agree on O(n)") {
  Rng rng(23);
  for (std::size_t n = 2; n <= 8; ++n) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto a = oracle::rotated_spectrum(n, rng);
      const StiefelPoint q(random_orthogonal(n, rng));
      const Matrix f = sga_field(a, q).matrix();
      CHECK(max_abs_diff(f, componentwise_field(a, q)) <= 1e-11);
      CHECK(max_abs_diff(f, a.matrix() * q.matrix() - q.matrix() * t_matrix(a, q)) <= 1e-11);
    }
  }
}

TEST_CASE("componentwise_field") {
  const auto a = oracle::diag_spectrum(4);
  Matrix e2(4, 1);
  e2(1, 0) = 1.0;
  CHECK(componentwise_field(a, StiefelPoint(e2)).frobenius_norm() == 0.0);

  Rng rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ar = oracle::rotated_spectrum(4, rng);
    const Matrix full = random_orthogonal(4, rng);
    const Matrix f4 = componentwise_field(ar, StiefelPoint(full));
    const Matrix f2 = componentwise_field(ar, StiefelPoint(full.leading_columns(2)));
    CHECK(f2 == f4.leading_columns(2));
  }
}

TEST_CASE("sga_update_field") {
  Rng rng(25);
  SUBCASE("matches the componentwise form on O(n)") {
    for (int trial = 0; trial < 10; ++trial) {
      const auto a = oracle::rotated_spectrum(5, rng);
      const StiefelPoint q(random_orthogonal(5, rng));
      CHECK(max_abs_diff(sga_update_field(a.matrix(), q.matrix()), componentwise_field(a, q)) <=
            1e-12);
    }
  }
  SUBCASE("rank-one Λ at Q = I") {
    const std::vector<double> x{1.0, -2.0, 0.5};
    Matrix lambda(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) lambda(i, j) = x[i] * x[j];
    const Matrix id = Matrix::identity(3);
    CHECK(max_abs_diff(sga_update_field(lambda, id), fields::sigma(lambda, id)) <= 1e-15);
  }
  SUBCASE("non-orthogonal Q splits into drift and bracket") {
    const Matrix lambda = random_symmetric(4, rng);
    const Matrix q = random_gaussian(4, 4, rng);
    const Matrix diff = sga_update_field(lambda, q) - q * fields::sigma(lambda, q);
    CHECK(diff.frobenius_norm() > 1e-3);
    CHECK(max_abs_diff(diff, lambda * q - q * q.transpose() * lambda * q) <= 1e-12);
  }
}

TEST_CASE("t_matrix") {
  const auto a = oracle::diag_spectrum(4);
  CHECK(t_matrix(a, StiefelPoint::identity(4)) == a.matrix());
  Rng rng(26);
  for (int trial = 0; trial < 10; ++trial) {
    const StiefelPoint q(random_orthogonal(4, rng));
    const Matrix t = t_matrix(a, q);
    CHECK(strictly_lower_zero(t));
    CHECK((a.matrix() * q.matrix() - q.matrix() * t - sga_field(a, q).matrix()).frobenius_norm() <=
          1e-10);
  }
}

TEST_CASE("brockett_field") {
  const auto a = oracle::diag_spectrum(3);
  const auto n = WeightVector::defaults(3);
  CHECK(brockett_field(a, n, StiefelPoint::identity(3)).matrix().frobenius_norm() == 0.0);
  for (const auto& eq : enumerate_equilibria(3))
    CHECK(brockett_field(a, n, StiefelPoint(eq.matrix())).matrix().frobenius_norm() <= 1e-13);
  Rng rng(27);
  for (int trial = 0; trial < 20; ++trial) {
    const StiefelPoint q(random_orthogonal(3, rng));
    CHECK(skew_defect(q.matrix(), brockett_field(a, n, q).matrix()) <= 1e-10);
  }
}

TEST_CASE("tangency of every field") {
  Rng rng(28);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 7;
    const auto a = oracle::rotated_spectrum(n, rng);
    const auto w = WeightVector::defaults(n);
    const StiefelPoint q(random_orthogonal(n, rng));
    const auto s = SkewFieldSpec::constant(random_skew(n, rng));
    CHECK(skew_defect(q.matrix(), sga_field(a, q).matrix()) <= 1e-10);
    CHECK(skew_defect(q.matrix(), brockett_field(a, w, q).matrix()) <= 1e-10);
    CHECK(skew_defect(q.matrix(), llg_field_tildeg(a, w, s, q).value.matrix()) <= 1e-10);
    CHECK(skew_defect(q.matrix(), llg_field_euclid(a, w, s, q).value.matrix()) <= 1e-10);
  }
}

TEST_CASE("TangentVector rejects normal directions") {
  CHECK_THROWS_AS(TangentVector(Matrix::identity(3), Matrix::identity(3)), Error);
  CHECK_NOTHROW(TangentVector(Matrix::identity(2), Matrix{{0, 1}, {-1, 0}}));
}

TEST_CASE("SkewFieldSpec verifies skewness") {
  const SkewFieldSpec bad([](const Matrix&) { return Matrix::identity(2); });
  CHECK_THROWS_AS(bad(Matrix::identity(2)), Error);
  CHECK(SkewFieldSpec::zero(3)(Matrix::identity(3)) == Matrix(3, 3));
}

TEST_CASE("hamiltonian_hat") {
  Rng rng(29);
  const auto inner = euclidean_metric();
  const Matrix q = random_orthogonal(3, rng);
  const TangentVector g(q, q * random_skew(3, rng));
  const TangentVector m(q, q * random_skew(3, rng));
  CHECK(hamiltonian_hat(g, g, inner).matrix().frobenius_norm() == 0.0);
  const TangentVector zero(q, Matrix(3, 3));
  CHECK(hamiltonian_hat(zero, m, inner).matrix().frobenius_norm() == 0.0);

  SUBCASE("perpendicular under the Euclidean and the adapted metric") {
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 2 + trial % 5;
      const auto a = oracle::rotated_spectrum(n, rng);
      const auto w = WeightVector::defaults(n);
      const StiefelPoint p(random_orthogonal(n, rng));
      const TangentVector grad(p.matrix(), p.matrix() * random_skew(n, rng));
      const TangentVector m1(p.matrix(), p.matrix() * random_skew(n, rng));
      const auto h = hamiltonian_hat(grad, m1, inner);
      const double scale = inner(grad.matrix(), grad.matrix()) * grad.matrix().frobenius_norm() *
                           m1.matrix().frobenius_norm();
      CHECK(std::abs(inner(grad.matrix(), h.matrix())) <= 1e-12 * scale);

      const auto g_t = tildeg_metric(a, w, p);
      const auto ht = hamiltonian_hat(grad, m1, g_t);
      CHECK(std::abs(g_t(grad.matrix(), ht.matrix())) <=
            1e-10 * std::abs(g_t(grad.matrix(), grad.matrix())) * (1.0 + std::abs(g_t(m1.matrix(), m1.matrix()))));
    }
  }
}

TEST_CASE("LLG fields") {
  Rng rng(30);
  SUBCASE("zero skew field reduces exactly") {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 2 + trial % 5;
      const auto a = oracle::rotated_spectrum(n, rng);
      const auto w = WeightVector::defaults(n);
      const StiefelPoint q(random_orthogonal(n, rng));
      const auto zero = SkewFieldSpec::zero(n);
      CHECK(llg_field_tildeg(a, w, zero, q).value.matrix() == sga_field(a, q).matrix());
      CHECK(llg_field_euclid(a, w, zero, q).value.matrix() == brockett_field(a, w, q).matrix());
    }
  }
  SUBCASE("equilibria give the zero field with a degeneracy flag") {
    const auto a = oracle::diag_spectrum(3);
    const auto w = WeightVector::defaults(3);
    const auto s = SkewFieldSpec::constant(random_skew(3, rng));
    for (const auto& eq : enumerate_equilibria(3)) {
      const StiefelPoint q(eq.matrix());
      const auto t = llg_field_tildeg(a, w, s, q);
      const auto e = llg_field_euclid(a, w, s, q);
      CHECK(t.degenerate);
      CHECK(e.degenerate);
      CHECK(t.value.matrix().frobenius_norm() <= 1e-13);
      CHECK(e.value.matrix().frobenius_norm() <= 1e-13);
    }
  }
  SUBCASE("hat parts are perpendicular to the gradient") {
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 2 + trial % 5;
      const auto a = oracle::rotated_spectrum(n, rng);
      const auto w = WeightVector::defaults(n);
      const StiefelPoint q(random_orthogonal(n, rng));
      const Matrix s0 = random_skew(n, rng);
      const auto s = SkewFieldSpec::constant(s0);
      const Matrix qs = q.matrix() * s0;

      const Matrix b = brockett_field(a, w, q).matrix();
      const Matrix hat_e = llg_field_euclid(a, w, s, q).value.matrix() - b;
      CHECK(std::abs(frobenius_inner(b, hat_e)) <=
            1e-10 * b.frobenius_norm() * b.frobenius_norm() * b.frobenius_norm() * qs.frobenius_norm());

      const Matrix f = sga_field(a, q).matrix();
      const Matrix hat_t = llg_field_tildeg(a, w, s, q).value.matrix() - f;
      const auto g_t = tildeg_metric(a, w, q);
      const Matrix expected =
          hamiltonian_hat(TangentVector(q.matrix(), f), TangentVector(q.matrix(), qs), g_t).matrix();
      CHECK(max_abs_diff(hat_t, expected) <= 1e-10 * (1.0 + expected.frobenius_norm()));
    }
  }
  SUBCASE("energy still increases along the LLG fields") {
    const double h = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 2 + trial % 5;
      const auto a = oracle::rotated_spectrum(n, rng);
      const auto w = WeightVector::defaults(n);
      const StiefelPoint q(random_orthogonal(n, rng));
      const auto s = SkewFieldSpec::constant(3.0 * random_skew(n, rng));
      for (const Matrix& x : {llg_field_tildeg(a, w, s, q).value.matrix(),
                              llg_field_euclid(a, w, s, q).value.matrix()}) {
        const double up = weighted_rayleigh(a.matrix(), w, q.matrix() + h * x);
        const double down = weighted_rayleigh(a.matrix(), w, q.matrix() - h * x);
        // d/dt(−E) ≤ 1e−10
        CHECK(-(up - down) / (2 * h) <= 1e-10);
      }
    }
  }
}

TEST_CASE("adapted metric") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const auto a = oracle::rotated_spectrum(n, rng);
    const auto w = WeightVector::defaults(n);
    const StiefelPoint q(random_orthogonal(n, rng));
    const TangentVector f = sga_field(a, q);
    const Matrix ep = fields::free_energy_gradient(a.matrix(), w.values(), q.matrix());
    const TangentVector x(q.matrix(), q.matrix() * random_skew(n, rng));

    CHECK(metric_tildeg(f, f, a, w, q) == doctest::Approx(-frobenius_inner(ep, f.matrix())).epsilon(1e-10));
    CHECK(metric_tildeg(f, f, a, w, q) > 0.0);
    // Compatibility: ⟨F, X⟩ = −⟨E′, X⟩_F.
    const double lhs = metric_tildeg(f, x, a, w, q);
    CHECK(std::abs(lhs + frobenius_inner(ep, x.matrix())) <= 1e-9 * (1.0 + std::abs(lhs)));
    // A direction with ⟨E′, X⟩ = 0 is g̃-orthogonal to F.
    const Matrix x0 =
        x.matrix() - (frobenius_inner(ep, x.matrix()) / frobenius_inner(ep, f.matrix())) * f.matrix();
    CHECK(std::abs(metric_tildeg(TangentVector(q.matrix(), x0), f, a, w, q)) <= 1e-10);
  }
  SUBCASE("undefined on the equilibrium set") {
    const auto a = oracle::diag_spectrum(3);
    CHECK_THROWS_AS(tildeg_metric(a, WeightVector::defaults(3), StiefelPoint::identity(3)), Error);
  }
}

TEST_CASE("tangent_projection") {
  Rng rng(32);
  const auto a = oracle::rotated_spectrum(4, rng);
  const auto w = WeightVector::defaults(4);
  const StiefelPoint q(random_orthogonal(4, rng));
  const Matrix tangent = q.matrix() * random_skew(4, rng);
  CHECK(max_abs_diff(tangent_projection(tangent, q).matrix(), tangent) <= 1e-14);
  const Matrix normal = q.matrix() * random_symmetric(4, rng);
  CHECK(tangent_projection(normal, q).matrix().frobenius_norm() <= 1e-14);
  const Matrix eprime = scale_cols(a.matrix() * q.matrix(), w.values()) * 2.0;
  CHECK(max_abs_diff(tangent_projection(eprime, q).matrix(), brockett_field(a, w, q).matrix()) <=
        1e-13);
}

TEST_CASE("riccati_field") {
  const auto a = oracle::diag_spectrum(4);
  CHECK(riccati_field(a, Matrix::identity(4)).frobenius_norm() == 0.0);
  CHECK(riccati_field(a, Matrix(4, 4)).frobenius_norm() == 0.0);
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ar = oracle::rotated_spectrum(4, rng);
    const Matrix q = random_gaussian(4, 4, rng);
    const Matrix qdot = sga_update_field(ar.matrix(), q);
    const Matrix pdot = qdot * q.transpose() + q * qdot.transpose();
    const Matrix p = symmetric_part(q * q.transpose());
    CHECK(max_abs_diff(pdot, riccati_field(ar, p)) <= 1e-10 * (1.0 + pdot.frobenius_norm()));
  }
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ojaflow/energy.hpp"
#include "ojaflow/error.hpp"
#include "ojaflow/integrator.hpp"
#include "ojaflow/random.hpp"
#include "ojaflow/stable_manifold.hpp"
#include "support/oracle.hpp"

using namespace ojaflow;
using Idx = std::vector<std::size_t>;

namespace {

// Gaussian matrix with roughly `zero_prob` of its entries zeroed, so σ is
// frequently not the identity. Returns an empty matrix when it is close to
// singular (Hadamard ratio |det| / Π|col| below 1e-3).
Matrix sparse_invertible(std::size_t n, double zero_prob, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m = random_gaussian(n, n, rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (u(rng) < zero_prob) m(i, j) = 0.0;
  const Eigen::MatrixXd e = oracle::to_eigen(m);
  if (!(std::abs(e.determinant()) > 1e-3 * e.colwise().norm().prod())) return {};
  return m;
}

std::size_t svd_rank(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-9 * s(0)) ++r;
  return r;
}

// Row m minus the combination of rows 0..m−1 that clears the columns i_{m−1};
// solved with Eigen independently of the library.
std::vector<double> residual_row(const Matrix& q, const Idx& sigma, std::size_t m) {
  const std::size_t n = q.rows();
  const Eigen::MatrixXd e = oracle::to_eigen(q);
  Eigen::RowVectorXd row = e.row(static_cast<Eigen::Index>(m));
  if (m > 0) {
    Eigen::MatrixXd sub(m, m);
    Eigen::RowVectorXd rhs(m);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t k = 0; k < m; ++k) sub(r, k) = e(r, sigma[k]);
    for (std::size_t k = 0; k < m; ++k) rhs(k) = e(m, sigma[k]);
    const Eigen::RowVectorXd c = sub.transpose().fullPivLu().solve(rhs.transpose()).transpose();
    row -= c * e.topRows(static_cast<Eigen::Index>(m));
  }
  return std::vector<double>(row.data(), row.data() + n);
}

Trajectory sga_run(const SpectralMatrix& a, const Matrix& q0, double threshold, std::size_t stride,
                   double t_max = std::numeric_limits<double>::quiet_NaN()) {
  IntegratorConfig cfg;
  cfg.convergence_threshold = threshold;
  cfg.sample_stride = stride;
  cfg.t_max = t_max;
  return integrate(sga_system(a, WeightVector::defaults(a.n())), q0, cfg);
}

}  // namespace

TEST_CASE("sigma_permutation") {
  CHECK(sigma_permutation(Matrix::identity(5)) == Idx{0, 1, 2, 3, 4});
  CHECK(sigma_permutation(Matrix{{0, 1, 0}, {1, 0, 1}, {0, 1, 1}}) == Idx{1, 0, 2});
  CHECK(sigma_permutation(oracle::example_q1()) == Idx{1, 2, 0, 3});
  CHECK_THROWS_AS(sigma_permutation(Matrix{{1, 2}, {2, 4}}), Error);
}

TEST_CASE("sigma is a bijection and ambiguity is flagged") {
  Rng rng(50);
  int tested = 0;
  int non_identity = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const Matrix m = sparse_invertible(n, 0.4, rng);
    if (m.empty()) continue;
    ++tested;
    Idx s = sigma_permutation(m);
    Idx iota(n);
    std::iota(iota.begin(), iota.end(), 0);
    if (s != iota) ++non_identity;
    std::sort(s.begin(), s.end());
    CHECK(s == iota);
  }
  CHECK(tested > 5000);
  CHECK(non_identity > 1000);

  const Matrix nearly{{1e-11, 1.0}, {1.0, 0.0}};
  const auto an = analyze_sigma(nearly);
  CHECK(an.ambiguous);
  CHECK(an.ambiguous_stage == std::optional<std::size_t>(0));
  CHECK_FALSE(analyze_sigma(Matrix{{0.0, 1.0}, {1.0, 0.0}}).ambiguous);
}

TEST_CASE("z_values") {
  CHECK(z_values(Matrix::identity(4)) == std::vector<double>{1, 1, 1, 1});

  SUBCASE("the structured 4x4 start") {
    const Matrix q = oracle::example_q1();
    const auto z = z_values(q);
    REQUIRE(z.size() == 4);
    CHECK(std::abs(z[0] - std::sqrt(2.0) / 2) <= 1e-12);
    CHECK(std::abs(z[1] - 2 * std::sqrt(3.0) / 3) <= 1e-12);
    CHECK(std::abs(z[2] + std::sqrt(2.0) / 2) <= 1e-12);
    // The last pivot is fixed by orthogonality: the z's multiply to det Q
    // up to the permutation sign, and |det Q| = 1.
    const double lead = oracle::det(submatrix(q, Idx{0, 1, 2}, Idx{0, 1, 2}));
    CHECK(std::abs(std::abs(z[3]) - 1.0 / std::abs(lead)) <= 1e-12);
    CHECK(std::abs(z[3] - std::sqrt(3.0)) <= 1e-12);
    CHECK(std::abs(std::abs(z[0] * z[1] * z[2] * z[3]) - std::abs(oracle::det(q))) <= 1e-12);
  }

  SUBCASE("pivot residual identity") {
    Rng rng(51);
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t n = 2 + trial % 5;
      const Matrix q = trial % 2 == 0 ? random_orthogonal(n, rng)
                                      : (trial % 4 == 1 ? random_structured_orthogonal(n, rng)
                                                        : sparse_invertible(n, 0.4, rng));
      if (q.empty()) continue;
      const Idx sigma = sigma_permutation(q);
      const auto z = z_values(q);
      for (std::size_t m = 0; m < n; ++m) {
        const auto r = residual_row(q, sigma, m);
        for (std::size_t j = 0; j < sigma[m]; ++j) CHECK(std::abs(r[j]) <= 1e-10);
        CHECK(std::abs(r[sigma[m]] - z[m]) <= 1e-10 * std::max(1.0, std::abs(z[m])));
      }
    }
  }
}

TEST_CASE("predict_limit") {
  const auto id = predict_limit(StiefelPoint::identity(4));
  CHECK(id.limit == Matrix::identity(4));
  CHECK(id.signs == std::vector<int>{1, 1, 1, 1});

  const auto p = predict_limit(StiefelPoint(oracle::example_q1()));
  CHECK(p.limit == oracle::example_q1_limit());
  CHECK(p.prefixes.back() == Idx{0, 1, 2, 3});
  CHECK(p.prefixes.front() == Idx{1});

  SUBCASE("rotated basis maps the limit back") {
    Rng rng(52);
    const auto a = oracle::rotated_spectrum(4, rng);
    const Matrix v = a.eigenvectors();
    const Matrix q0 = v * oracle::example_q1();
    const auto pr = predict_limit(a, StiefelPoint(q0));
    CHECK(max_abs_diff(pr.limit, v * oracle::example_q1_limit()) <= 1e-12);
  }
}

TEST_CASE("rank_identity_check") {
  for (std::size_t m = 1; m <= 4; ++m)
    for (std::size_t j = 1; j <= 4; ++j) CHECK(rank_identity_check(Matrix::identity(4), m, j));
  CHECK(rank_identity_check(Matrix{{0, 1, 0}, {1, 0, 1}, {0, 1, 1}}, 2, 1));

  Rng rng(53);
  int tested = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Matrix q = sparse_invertible(5, 0.35, rng);
    if (q.empty()) continue;
    ++tested;
    const Idx sigma = sigma_permutation(q);
    const Eigen::MatrixXd e = oracle::to_eigen(q);
    for (std::size_t m = 1; m <= 5; ++m) {
      for (std::size_t j = 1; j <= 5; ++j) {
        const std::size_t rank = svd_rank(e.topLeftCorner(m, j));
        const auto later = static_cast<std::size_t>(
            std::count_if(sigma.begin(), sigma.begin() + m, [&](std::size_t s) { return s + 1 > j; }));
        CHECK(rank + later == m);
        CHECK(rank_identity_check(q, m, j));
      }
    }
  }
  CHECK(tested > 5000);
}

TEST_CASE("is_stable_basin") {
  CHECK(is_stable_basin(Matrix::identity(4)));
  CHECK_FALSE(is_stable_basin(oracle::example_q1()));
  Rng rng(54);
  for (int trial = 0; trial < 500; ++trial) {
    const Matrix q = trial % 2 ? random_orthogonal(4, rng) : random_structured_orthogonal(4, rng);
    const Idx s = sigma_permutation(q);
    CHECK(is_stable_basin(q) == (s == Idx{0, 1, 2, 3}));
  }
}

TEST_CASE("convergence_rates") {
  using V = std::vector<double>;
  CHECK(convergence_rates(SpectralMatrix::diagonal(V{4, 3, 2, 1})).nu == V{1, 1, 1, 1});
  CHECK(convergence_rates(SpectralMatrix::diagonal(V{10, 5, 4, 1})).nu == V{5, 1, 1, 1});
  CHECK(convergence_rates(SpectralMatrix::diagonal(V{3, 2})).nu == V{1, 1});
  Rng rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_real_distribution<double> gap(0.1, 3.0);
    V l(6);
    l[5] = gap(rng);
    for (int i = 4; i >= 0; --i) l[i] = l[i + 1] + gap(rng);
    const auto nu = convergence_rates(SpectralMatrix::diagonal(l)).nu;
    for (std::size_t k = 1; k < 5; ++k) CHECK(nu[k] <= nu[k - 1]);
    CHECK(nu[5] == nu[4]);
  }
}

TEST_CASE("verify_exponential") {
  SUBCASE("2x2 bound and verdict") {
    const auto a = SpectralMatrix::diagonal(std::vector<double>{2, 1});
    const auto traj = sga_run(a, oracle::rotation(0.4), 1e-6, 5);
    const auto rep = verify_exponential(traj, convergence_rates(a));
    REQUIRE(!rep.entries.empty());
    const auto& e11 = rep.entries.front();
    CHECK(e11.i == 0);
    CHECK(e11.j == 0);
    CHECK(e11.bound == -2.0);
    CHECK(rep.all_ok);
  }
  SUBCASE("constant trajectory at I is entirely at the floor") {
    const auto a = oracle::diag_spectrum(3);
    Trajectory traj;
    for (int k = 0; k < 20; ++k) traj.samples.push_back({0.1 * k, Matrix::identity(3), 6.0, 0, 0});
    traj.energy_max = 10.0;
    ExponentialOptions opts;
    opts.window = std::pair{0.0, 2.0};
    const auto rep = verify_exponential(traj, convergence_rates(a), opts);
    CHECK(rep.entries.size() == 9);
    for (const auto& e : rep.entries) CHECK(e.verdict == EntryVerdict::floor);
    CHECK(rep.all_ok);
  }
  SUBCASE("seeded 3x3 run") {
    Rng rng(56);
    const auto a = oracle::diag_spectrum(3);
    Matrix q0 = random_orthogonal(3, rng);
    while (!is_stable_basin(q0)) q0 = random_orthogonal(3, rng);
    const auto rep = verify_exponential(sga_run(a, q0, 1e-6, 5), convergence_rates(a));
    for (const auto& e : rep.entries) CHECK(e.verdict != EntryVerdict::fail);
    CHECK(std::count_if(rep.entries.begin(), rep.entries.end(),
                        [](const EntryRate& e) { return e.verdict == EntryVerdict::pass; }) > 0);
  }
}

TEST_CASE("sigma_invariance_check") {
  SUBCASE("constant trajectory") {
    Trajectory traj;
    for (int k = 0; k < 5; ++k) traj.samples.push_back({double(k), Matrix::identity(3), 0, 0, 0});
    const auto r = sigma_invariance_check(traj);
    CHECK(r.verdict == InvarianceVerdict::holds);
  }
  SUBCASE("structured 4x4 start keeps its permutation") {
    const auto a = SpectralMatrix::diagonal(std::vector<double>{4, 3, 2, 1});
    const auto traj = sga_run(a, oracle::example_q1(), 1e-10, 10);
    const auto r = sigma_invariance_check(traj);
    CHECK(r.verdict == InvarianceVerdict::holds);
    CHECK(r.sigma0 == Idx{1, 2, 0, 3});
    CHECK(traj.samples.size() > 10);
  }
  SUBCASE("near-boundary start is reported indeterminate, not violated") {
    const auto a = SpectralMatrix::diagonal(std::vector<double>{2, 1});
    const double eps = 1e-7;
    const double c = std::sqrt(1 - eps * eps);
    const Matrix q0{{eps, -c}, {c, eps}};
    const auto traj = sga_run(a, q0, 1e-10, 1, 30.0);
    const auto r = sigma_invariance_check(traj, 1e-6);
    CHECK(r.verdict == InvarianceVerdict::indeterminate);
    CHECK_FALSE(r.first_violation.has_value());
    REQUIRE(!r.indeterminate_times.empty());
    // q11 grows like e^{t}·1e−7 and crosses the 1e−6 tolerance near t = ln 10.
    CHECK(r.indeterminate_times.front() == doctest::Approx(std::log(10.0)).epsilon(0.1));
  }
}

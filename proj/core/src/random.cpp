#include "ojaflow/random.hpp"

#include <algorithm>
#include <numeric>

#include "ojaflow/error.hpp"
#include "ojaflow/linalg.hpp"

namespace ojaflow {

Matrix random_gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

Matrix random_orthogonal(std::size_t n, Rng& rng) { return random_stiefel(n, n, rng); }

Matrix random_stiefel(std::size_t n, std::size_t p, Rng& rng) {
  // A Gaussian matrix is full rank with probability one; retry covers the rest.
  for (;;) {
    try {
      return gram_schmidt_qr(random_gaussian(n, p, rng), 1e-8).q;
    } catch (const Error&) {
    }
  }
}

Matrix random_symmetric(std::size_t n, Rng& rng) {
  return symmetric_part(random_gaussian(n, n, rng));
}

Matrix random_skew(std::size_t n, Rng& rng) { return skew_part(random_gaussian(n, n, rng)); }

Matrix random_structured_orthogonal(std::size_t n, Rng& rng) {
  if (n < 2) return random_orthogonal(n, rng);
  std::uniform_int_distribution<std::size_t> pick_k(1, n - 1);
  const std::size_t k = pick_k(rng);

  // Rows 1..n-1 shuffled, then cut into k non-empty blocks.
  std::vector<std::size_t> pool(n - 1);
  std::iota(pool.begin(), pool.end(), std::size_t{1});
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<std::size_t> cuts(pool.size() - 1);
  std::iota(cuts.begin(), cuts.end(), std::size_t{1});
  std::shuffle(cuts.begin(), cuts.end(), rng);
  cuts.resize(k - 1);
  std::sort(cuts.begin(), cuts.end());
  cuts.insert(cuts.begin(), 0);
  cuts.push_back(pool.size());

  std::normal_distribution<double> dist(0.0, 1.0);
  for (;;) {
    Matrix m = random_gaussian(n, n, rng);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < n; ++i) m(i, c) = 0.0;
      for (std::size_t b = cuts[c]; b < cuts[c + 1]; ++b) m(pool[b], c) = dist(rng);
    }
    try {
      return gram_schmidt_qr(m, 1e-8).q;
    } catch (const Error&) {
    }
  }
}

}  // namespace ojaflow

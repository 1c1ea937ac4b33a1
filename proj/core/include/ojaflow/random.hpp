#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "ojaflow/matrix.hpp"

namespace ojaflow {

using Rng = std::mt19937_64;

Matrix random_gaussian(std::size_t rows, std::size_t cols, Rng& rng);
/// Haar-distributed orthogonal matrix (Gram–Schmidt of a Gaussian matrix).
Matrix random_orthogonal(std::size_t n, Rng& rng);
/// n×p with orthonormal columns.
Matrix random_stiefel(std::size_t n, std::size_t p, Rng& rng);
Matrix random_symmetric(std::size_t n, Rng& rng);
Matrix random_skew(std::size_t n, Rng& rng);

/// Orthogonal matrix whose first k columns (1 ≤ k < n) have disjoint row
/// supports that avoid row 0, so the σ-permutation is not the identity. The
/// remaining columns are a random orthonormal completion.
Matrix random_structured_orthogonal(std::size_t n, Rng& rng);

}  // namespace ojaflow

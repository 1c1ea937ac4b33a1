#pragma once

#include <cstddef>

#include "ojaflow/matrix.hpp"

namespace ojaflow {

inline constexpr double kDefaultOrthogonalityTol = 1e-8;

/// n×p matrix with orthonormal columns (p = n is the square case).
/// Validated on construction; immutable afterwards.
class StiefelPoint {
 public:
  explicit StiefelPoint(Matrix q, double tol = kDefaultOrthogonalityTol);

  static StiefelPoint identity(std::size_t n);

  const Matrix& matrix() const noexcept { return q_; }
  std::size_t n() const noexcept { return q_.rows(); }
  std::size_t p() const noexcept { return q_.cols(); }
  bool is_square() const noexcept { return q_.rows() == q_.cols(); }
  double defect() const { return orthogonality_defect(q_); }

  /// q_{i,j}, 0-based.
  double operator()(std::size_t i, std::size_t j) const noexcept { return q_(i, j); }

 private:
  Matrix q_;
};

}  // namespace ojaflow

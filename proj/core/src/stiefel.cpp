#include "ojaflow/stiefel.hpp"

#include <string>

#include "ojaflow/error.hpp"

namespace ojaflow {

StiefelPoint::StiefelPoint(Matrix q, double tol) : q_(std::move(q)) {
  if (q_.cols() == 0 || q_.cols() > q_.rows()) {
    throw Error(ErrorCode::dimension_mismatch,
                "Stiefel point needs 1 <= p <= n, got " + std::to_string(q_.rows()) + "x" +
                    std::to_string(q_.cols()));
  }
  if (!q_.all_finite()) throw Error(ErrorCode::invalid_argument, "non-finite entries");
  const double d = orthogonality_defect(q_);
  if (!(d <= tol)) {
    throw Error(ErrorCode::not_orthogonal,
                "columns not orthonormal: ||Q^T Q - I||_F = " + std::to_string(d));
  }
}

StiefelPoint StiefelPoint::identity(std::size_t n) { return StiefelPoint(Matrix::identity(n)); }

}  // namespace ojaflow

#pragma once

#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ojaflow/matrix.hpp"

namespace ojaflow {

struct TrajectorySample {
  double t = 0.0;
  Matrix q;
  double energy = 0.0;
  double orth_defect = 0.0;
  double field_norm = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  /// Supremum of the energy over the manifold (Σ μ_i λ_i for the flows here);
  /// NaN when unknown.
  double energy_max = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::size_t steps = 0;

  bool empty() const noexcept { return samples.empty(); }
  const TrajectorySample& front() const { return samples.front(); }
  const TrajectorySample& back() const { return samples.back(); }
};

/// Ordinary least-squares slope of y against x (0 when x is constant).
double least_squares_slope(std::span<const double> x, std::span<const double> y);

/// Formats with 17 significant digits, the round-trip precision of a double.
std::string format_double(double v);

/// Header `t,q_1_1,...,q_n_p,energy,orth_defect,field_norm`; q entries row-major.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace ojaflow

#include "ojaflow/trajectory.hpp"

#include <cstdio>
#include <numeric>

#include "ojaflow/error.hpp"

namespace ojaflow {

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) {
    throw Error(ErrorCode::invalid_argument, "slope fit needs equal, non-empty samples");
  }
  const double k = static_cast<double>(x.size());
  const double xm = std::accumulate(x.begin(), x.end(), 0.0) / k;
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - xm) * (y[i] - ym);
    sxx += (x[i] - xm) * (x[i] - xm);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t n = traj.empty() ? 0 : traj.front().q.rows();
  const std::size_t p = traj.empty() ? 0 : traj.front().q.cols();
  os << "t";
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= p; ++j) os << ",q_" << i << '_' << j;
  os << ",energy,orth_defect,field_norm\n";
  for (const auto& s : traj.samples) {
    os << format_double(s.t);
    for (double v : s.q.data()) os << ',' << format_double(v);
    os << ',' << format_double(s.energy) << ',' << format_double(s.orth_defect) << ','
       << format_double(s.field_norm) << '\n';
  }
}

}  // namespace ojaflow

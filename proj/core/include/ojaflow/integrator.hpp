#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "ojaflow/energy.hpp"
#include "ojaflow/flows.hpp"
#include "ojaflow/linalg.hpp"
#include "ojaflow/matrix.hpp"
#include "ojaflow/trajectory.hpp"

namespace ojaflow {

/// A vector field on matrices together with the energy it is monitored by.
struct FlowSystem {
  std::string name;
  std::function<Matrix(const Matrix&)> field;
  std::function<double(const Matrix&)> energy;
  double energy_max = std::numeric_limits<double>::quiet_NaN();
  /// Horizon used when IntegratorConfig::t_max is not set (100/ν_n).
  double default_t_max = 100.0;
};

FlowSystem sga_system(const SpectralMatrix& a, const WeightVector& n);
FlowSystem brockett_system(const SpectralMatrix& a, const WeightVector& n);
FlowSystem llg_tildeg_system(const SpectralMatrix& a, const WeightVector& n, SkewFieldSpec s);
FlowSystem llg_euclid_system(const SpectralMatrix& a, const WeightVector& n, SkewFieldSpec s);

enum class Method { rk4, rk4_projected, euler };
const char* to_string(Method m) noexcept;
Method parse_method(const std::string& s);

struct IntegratorConfig {
  Method method = Method::rk4_projected;
  double dt = 0.01;
  // Every step: a single RK4 step already leaves a defect near 1e−7 for n ≈ 8.
  std::size_t projection_interval = 1;
  /// NaN selects the flow's default horizon.
  double t_max = std::numeric_limits<double>::quiet_NaN();
  double convergence_threshold = 1e-10;
  std::size_t sample_stride = 10;
  /// Abort when ‖QᵀQ − I‖_F exceeds this.
  double max_defect = 1e-4;

  void validate() const;
};

/// Fixed-step integration from Q0. Samples step 0, every `sample_stride`
/// steps, and the final step. Stops early once ‖field‖_F drops below the
/// threshold. Throws divergence on a non-finite state or excessive defect.
Trajectory integrate(const FlowSystem& flow, const Matrix& q0, const IntegratorConfig& cfg);

struct LimitResult {
  Matrix raw;                  // state where the run stopped
  NearestEquilibrium nearest;  // snapped limit and its distance
  bool converged = false;
  Trajectory trajectory;
};

inline constexpr double kLimitDistanceTol = 1e-6;

/// Like integrate, but stops only where the field is below threshold AND the
/// state lies within kLimitDistanceTol of E.
LimitResult integrate_to_limit(const FlowSystem& flow, const SpectralMatrix& a,
                               const Matrix& q0, const IntegratorConfig& cfg);

struct RiccatiSample {
  double t = 0.0;
  Matrix p;
};

/// RK4 for Ṗ = AP + PA − 2PAP up to cfg.t_max (required), sampled every stride.
std::vector<RiccatiSample> integrate_riccati(const SpectralMatrix& a, const Matrix& p0,
                                             const IntegratorConfig& cfg);

struct RiccatiDecay {
  /// Smallest singular value of Q(t) over the samples, √λ_min(P(t)).
  double alpha = 0.0;
  /// Fitted slope of log‖P − I‖²_F over samples above the floor; NaN when
  /// fewer than `min_samples` remain.
  double slope = 0.0;
  double bound = 0.0;  // −4α²λ_n
  std::size_t samples = 0;
  bool at_floor = false;
  bool pass = false;  // at_floor, or slope ≤ bound·(1 − slack)
};

/// Exponential recovery of P(t) = Q(t)Qᵀ(t) towards I. Samples with
/// ‖P − I‖_F below `floor` are excluded from the fit.
RiccatiDecay riccati_decay(const SpectralMatrix& a, const std::vector<RiccatiSample>& traj,
                           double slack = 0.1, double floor = 1e-12,
                           std::size_t min_samples = 10);

/// Runs fn(0..count−1) on up to `jobs` threads. Worker w takes indices
/// w, w+jobs, ...; workers share nothing mutable and results come back in index
/// order, so output does not depend on the thread count.
template <class Fn>
auto run_batch(std::size_t count, std::size_t jobs, Fn fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out(count);
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += jobs) {
        try {
          out[i] = fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace ojaflow

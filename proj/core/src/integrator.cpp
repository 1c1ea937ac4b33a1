#include "ojaflow/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ojaflow/error.hpp"
#include "ojaflow/stable_manifold.hpp"

namespace ojaflow {

namespace {

double min_gap(const std::vector<double>& v) {
  double g = INFINITY;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) g = std::min(g, v[i] - v[i + 1]);
  return g;
}

double sga_horizon(const SpectralMatrix& a) {
  if (a.n() < 2) return 100.0;
  return 100.0 / convergence_rates(a).nu.back();
}

FlowSystem base_system(std::string name, const SpectralMatrix& a, const WeightVector& n) {
  if (n.n() != a.n()) throw Error(ErrorCode::dimension_mismatch, "weight count != n");
  FlowSystem f;
  f.name = std::move(name);
  f.energy = [am = a.matrix(), n](const Matrix& q) { return weighted_rayleigh(am, n, q); };
  f.energy_max = max_weighted_rayleigh(a, n);
  f.default_t_max = sga_horizon(a);
  return f;
}

}  // namespace

FlowSystem sga_system(const SpectralMatrix& a, const WeightVector& n) {
  FlowSystem f = base_system("sga", a, n);
  // Column form rather than QΣ: column j mixes only columns 1..j, so exact
  // zeros in leading columns survive rounding and saddle limits stay reachable.
  f.field = [am = a.matrix()](const Matrix& q) { return fields::componentwise(am, q); };
  return f;
}

FlowSystem brockett_system(const SpectralMatrix& a, const WeightVector& n) {
  FlowSystem f = base_system("brockett", a, n);
  // Linearized rates scale with the weight gaps as well as the eigenvalue gaps.
  if (n.n() >= 2) f.default_t_max /= std::min(1.0, min_gap(n.values()));
  f.field = [am = a.matrix(), mu = n.values()](const Matrix& q) {
    return fields::brockett(am, mu, q);
  };
  return f;
}

FlowSystem llg_tildeg_system(const SpectralMatrix& a, const WeightVector& n, SkewFieldSpec s) {
  FlowSystem f = base_system("llg-tildeg", a, n);
  f.field = [am = a.matrix(), mu = n.values(), s = std::move(s)](const Matrix& q) {
    return fields::llg_tildeg(am, mu, s(q), q);
  };
  return f;
}

FlowSystem llg_euclid_system(const SpectralMatrix& a, const WeightVector& n, SkewFieldSpec s) {
  FlowSystem f = base_system("llg-euclid", a, n);
  if (n.n() >= 2) f.default_t_max /= std::min(1.0, min_gap(n.values()));
  f.field = [am = a.matrix(), mu = n.values(), s = std::move(s)](const Matrix& q) {
    return fields::llg_euclid(am, mu, s(q), q);
  };
  return f;
}

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::rk4: return "rk4";
    case Method::rk4_projected: return "rk4-projected";
    case Method::euler: return "euler";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "rk4") return Method::rk4;
  if (s == "rk4-projected") return Method::rk4_projected;
  if (s == "euler") return Method::euler;
  throw Error(ErrorCode::invalid_argument,
              "unknown integration method '" + s + "' (rk4 | rk4-projected | euler)");
}

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::invalid_argument, "dt must be > 0");
  if (projection_interval < 1) {
    throw Error(ErrorCode::invalid_argument, "projection interval must be >= 1");
  }
  if (sample_stride < 1) throw Error(ErrorCode::invalid_argument, "sample stride must be >= 1");
  if (!(convergence_threshold > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "convergence threshold must be > 0");
  }
  if (!(max_defect > 0.0)) throw Error(ErrorCode::invalid_argument, "max defect must be > 0");
  if (!std::isnan(t_max) && !(t_max >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "t_max must be >= 0");
  }
}

namespace {

template <class Field>
Matrix rk4_step(const Field& f, const Matrix& q, const Matrix& k1, double dt) {
  const Matrix k2 = f(q + (0.5 * dt) * k1);
  const Matrix k3 = f(q + (0.5 * dt) * k2);
  const Matrix k4 = f(q + dt * k3);
  Matrix out = q;
  auto o = out.data();
  auto a = k1.data(), b = k2.data(), c = k3.data(), d = k4.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
  return out;
}

std::size_t step_count(double t_max, double dt) {
  return static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));
}

using StopRule = std::function<bool(const Matrix& q, double field_norm)>;

Trajectory integrate_impl(const FlowSystem& flow, const Matrix& q0, const IntegratorConfig& cfg,
                          const StopRule& stop, Matrix* final_state) {
  cfg.validate();
  if (!q0.all_finite()) throw Error(ErrorCode::invalid_argument, "Q0 has non-finite entries");
  const double horizon = std::isnan(cfg.t_max) ? flow.default_t_max : cfg.t_max;
  const std::size_t total = step_count(horizon, cfg.dt);

  Trajectory traj;
  traj.energy_max = flow.energy_max;
  Matrix q = q0;
  Matrix k1 = flow.field(q);
  double fn = k1.frobenius_norm();
  double defect = orthogonality_defect(q);
  auto record = [&](double t) {
    traj.samples.push_back({t, q, flow.energy(q), defect, fn});
  };
  record(0.0);
  if (stop(q, fn)) {
    traj.converged = true;
    if (final_state) *final_state = q;
    return traj;
  }

  for (std::size_t step = 1; step <= total; ++step) {
    if (cfg.method == Method::euler) {
      q += cfg.dt * k1;
    } else {
      q = rk4_step(flow.field, q, k1, cfg.dt);
    }
    if (cfg.method == Method::rk4_projected && step % cfg.projection_interval == 0) {
      q = gram_schmidt_qr(q, 1e-8).q;
    }
    const double t = static_cast<double>(step) * cfg.dt;
    if (!q.all_finite()) {
      throw Error(ErrorCode::divergence,
                  flow.name + ": non-finite state at t = " + format_double(t), step);
    }
    defect = orthogonality_defect(q);
    if (defect > cfg.max_defect) {
      throw Error(ErrorCode::divergence,
                  flow.name + ": orthogonality defect " + format_double(defect) +
                      " exceeds " + format_double(cfg.max_defect) + " at t = " +
                      format_double(t),
                  step);
    }
    k1 = flow.field(q);
    fn = k1.frobenius_norm();
    traj.steps = step;
    const bool done = stop(q, fn);
    if (step % cfg.sample_stride == 0 || done || step == total) record(t);
    if (done) {
      traj.converged = true;
      break;
    }
  }
  if (final_state) *final_state = q;
  return traj;
}

}  // namespace

Trajectory integrate(const FlowSystem& flow, const Matrix& q0, const IntegratorConfig& cfg) {
  const double thr = cfg.convergence_threshold;
  return integrate_impl(
      flow, q0, cfg, [thr](const Matrix&, double fn) { return fn < thr; }, nullptr);
}

LimitResult integrate_to_limit(const FlowSystem& flow, const SpectralMatrix& a,
                               const Matrix& q0, const IntegratorConfig& cfg) {
  if (!q0.is_square() || q0.rows() != a.n()) {
    throw Error(ErrorCode::dimension_mismatch, "integrate_to_limit needs square Q0 matching A");
  }
  const double thr = cfg.convergence_threshold;
  LimitResult out;
  out.trajectory = integrate_impl(
      flow, q0, cfg,
      [&](const Matrix& q, double fn) {
        return fn < thr && nearest_equilibrium(a, q).distance < kLimitDistanceTol;
      },
      &out.raw);
  out.converged = out.trajectory.converged;
  out.nearest = nearest_equilibrium(a, out.raw);
  return out;
}

std::vector<RiccatiSample> integrate_riccati(const SpectralMatrix& a, const Matrix& p0,
                                             const IntegratorConfig& cfg) {
  cfg.validate();
  require_symmetric(p0, 1e-10);
  if (p0.rows() != a.n()) throw Error(ErrorCode::dimension_mismatch, "P0 must be n x n");
  if (std::isnan(cfg.t_max)) {
    throw Error(ErrorCode::invalid_argument, "integrate_riccati needs an explicit t_max");
  }
  const Matrix& am = a.matrix();
  auto f = [&am](const Matrix& p) { return fields::riccati(am, p); };
  const std::size_t total = step_count(cfg.t_max, cfg.dt);
  std::vector<RiccatiSample> out{{0.0, p0}};
  Matrix p = p0;
  for (std::size_t step = 1; step <= total; ++step) {
    p = rk4_step(f, p, f(p), cfg.dt);
    if (!p.all_finite()) {
      throw Error(ErrorCode::divergence, "Riccati state became non-finite", step);
    }
    if (step % cfg.sample_stride == 0 || step == total) {
      out.push_back({static_cast<double>(step) * cfg.dt, p});
    }
  }
  return out;
}

RiccatiDecay riccati_decay(const SpectralMatrix& a, const std::vector<RiccatiSample>& traj,
                           double slack, double floor, std::size_t min_samples) {
  if (traj.empty()) throw Error(ErrorCode::invalid_argument, "empty Riccati trajectory");
  RiccatiDecay out;
  const Matrix id = Matrix::identity(a.n());
  double lo = INFINITY;
  std::vector<double> ts, logs;
  for (const auto& s : traj) {
    lo = std::min(lo, sym_eigendecomposition(symmetric_part(s.p)).values.back());
    const double d = (s.p - id).frobenius_norm();
    if (d >= floor) {
      ts.push_back(s.t);
      logs.push_back(std::log(d * d));
    }
  }
  out.alpha = std::sqrt(std::max(lo, 0.0));
  out.bound = -4.0 * out.alpha * out.alpha * a.eigenvalues().back();
  out.samples = ts.size();
  if (ts.size() < min_samples) {
    out.slope = std::numeric_limits<double>::quiet_NaN();
    out.at_floor = true;
    out.pass = true;
    return out;
  }
  out.slope = least_squares_slope(ts, logs);
  out.pass = out.slope <= out.bound * (1.0 - slack);
  return out;
}

}  // namespace ojaflow

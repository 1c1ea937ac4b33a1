#include "ojaflow/stable_manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ojaflow/error.hpp"

namespace ojaflow {

namespace {

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

void require_square(const Matrix& q) {
  if (!q.is_square() || q.rows() == 0) {
    throw Error(ErrorCode::dimension_mismatch, "expected a non-empty square matrix");
  }
}

Matrix in_basis(const Matrix& q, const std::optional<Matrix>& basis) {
  return basis ? basis->transpose() * q : q;
}

}  // namespace

double relative_minor(const Matrix& q, std::span<const std::size_t> rows,
                      std::span<const std::size_t> cols) {
  double scale = 1.0;
  for (std::size_t c : cols) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i) s += q(i, c) * q(i, c);
    scale *= std::sqrt(s);
  }
  if (scale == 0.0) return 0.0;
  return std::abs(submatrix_det(q, rows, cols)) / scale;
}

SigmaAnalysis analyze_sigma(const Matrix& q, double tol) {
  require_square(q);
  const std::size_t n = q.rows();
  const auto all = iota_n(n);
  if (!(relative_minor(q, all, all) > tol)) {
    throw Error(ErrorCode::singular, "Q is singular at the sigma tolerance");
  }
  SigmaAnalysis out;
  std::vector<bool> used(n, false);
  std::vector<std::size_t> cols;
  for (std::size_t m = 0; m < n; ++m) {
    const std::vector<std::size_t> rows(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m + 1));
    bool found = false;
    for (std::size_t k = 0; k < n && !found; ++k) {
      if (used[k]) continue;
      cols.push_back(k);
      const double r = relative_minor(q, rows, cols);
      if (r > tol) {
        used[k] = true;
        out.sigma.push_back(k);
        found = true;
      } else {
        cols.pop_back();
        if (r > kStructuralZero && !out.ambiguous) {
          out.ambiguous = true;
          out.ambiguous_stage = m;
        }
      }
    }
    if (!found) {
      throw Error(ErrorCode::ambiguous,
                  "no candidate determinant exceeds the tolerance at stage " +
                      std::to_string(m + 1),
                  m);
    }
  }
  return out;
}

std::vector<std::size_t> sigma_permutation(const Matrix& q, double tol) {
  return analyze_sigma(q, tol).sigma;
}

namespace {

std::vector<std::vector<std::size_t>> prefixes_of(const std::vector<std::size_t>& sigma) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  for (std::size_t s : sigma) {
    cur.insert(std::upper_bound(cur.begin(), cur.end(), s), s);
    out.push_back(cur);
  }
  return out;
}

std::vector<double> z_from_sigma(const Matrix& q, const std::vector<std::size_t>& sigma) {
  const auto pre = prefixes_of(sigma);
  const auto all = iota_n(q.rows());
  std::vector<double> z;
  double prev = 1.0;
  for (std::size_t m = 0; m < sigma.size(); ++m) {
    const std::vector<std::size_t> rows(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m + 1));
    const double d = submatrix_det(q, rows, pre[m]);
    if (prev == 0.0) {
      throw Error(ErrorCode::singular, "vanishing denominator in z ratio (inconsistent sigma)", m);
    }
    // Expanding the m-th minor along its eliminated last row picks up
    // (−1)^{m+pos} with pos the slot of σ_m in i_m; undoing it gives the pivot
    // left in column σ_m once rows 1..m−1 are subtracted, whose sign fixes the
    // limit orientation.
    const auto pos = static_cast<std::size_t>(
        std::lower_bound(pre[m].begin(), pre[m].end(), sigma[m]) - pre[m].begin());
    const double parity = (m + pos) % 2 == 0 ? 1.0 : -1.0;
    z.push_back(parity * d / prev);
    prev = d;
  }
  return z;
}

}  // namespace

std::vector<double> z_values(const Matrix& q, double tol) {
  return z_from_sigma(q, sigma_permutation(q, tol));
}

LimitPrediction predict_limit(const StiefelPoint& q0, double tol) {
  if (!q0.is_square()) throw Error(ErrorCode::dimension_mismatch, "predict_limit needs square Q0");
  const Matrix& q = q0.matrix();
  const std::size_t n = q.rows();
  LimitPrediction out;
  out.sigma = sigma_permutation(q, tol);
  out.prefixes = prefixes_of(out.sigma);
  out.z = z_from_sigma(q, out.sigma);
  out.limit = Matrix(n, n);
  for (std::size_t m = 0; m < n; ++m) {
    const int s = out.z[m] < 0.0 ? -1 : 1;
    out.signs.push_back(s);
    out.limit(m, out.sigma[m]) = s;
  }
  return out;
}

LimitPrediction predict_limit(const SpectralMatrix& a, const StiefelPoint& q0, double tol) {
  if (a.is_diagonal()) return predict_limit(q0, tol);
  const Matrix& v = a.eigenvectors();
  LimitPrediction out = predict_limit(StiefelPoint(v.transpose() * q0.matrix()), tol);
  out.limit = v * out.limit;
  return out;
}

bool rank_identity_check(const Matrix& q, std::size_t m, std::size_t j, double tol) {
  require_square(q);
  const std::size_t n = q.rows();
  if (m == 0 || j == 0 || m > n || j > n) {
    throw Error(ErrorCode::invalid_argument, "rank_identity_check: m, j must lie in 1..n");
  }
  const auto sigma = sigma_permutation(q, tol);
  const auto all = iota_n(n);
  const Matrix sub = submatrix(q, std::span(all).first(m), std::span(all).first(j));
  const std::size_t rank = numerical_rank(sub, tol);
  std::size_t card = 0;
  for (std::size_t k = 0; k < m; ++k)
    if (sigma[k] >= j) ++card;
  return rank + card == m;
}

bool is_stable_basin(const Matrix& q0, double tol) {
  require_square(q0);
  const auto all = iota_n(q0.rows());
  for (std::size_t k = 1; k <= q0.rows(); ++k) {
    const auto idx = std::span(all).first(k);
    if (!(relative_minor(q0, idx, idx) > tol)) return false;
  }
  return true;
}

RateVector convergence_rates(const SpectralMatrix& a, double min_gap) {
  const auto& l = a.eigenvalues();
  if (l.size() < 2) throw Error(ErrorCode::invalid_argument, "rates need n >= 2");
  RateVector r;
  double run = INFINITY;
  for (std::size_t k = 0; k + 1 < l.size(); ++k) {
    const double gap = l[k] - l[k + 1];
    if (gap < min_gap) {
      throw Error(ErrorCode::invalid_argument,
                  "eigenvalue gap " + std::to_string(k + 1) + " below minimum", k);
    }
    run = std::min(run, gap);
    r.nu.push_back(run);
  }
  r.nu.push_back(r.nu.back());
  return r;
}

const char* to_string(EntryVerdict v) noexcept {
  switch (v) {
    case EntryVerdict::pass: return "pass";
    case EntryVerdict::fail: return "fail";
    case EntryVerdict::floor: return "floor";
  }
  return "?";
}

const char* to_string(InvarianceVerdict v) noexcept {
  switch (v) {
    case InvarianceVerdict::holds: return "holds";
    case InvarianceVerdict::violated: return "violated";
    case InvarianceVerdict::indeterminate: return "indeterminate";
  }
  return "?";
}

ExponentialReport verify_exponential(const Trajectory& traj, const RateVector& rates,
                                     const ExponentialOptions& opts) {
  if (traj.empty()) throw Error(ErrorCode::invalid_argument, "empty trajectory");
  ExponentialReport rep;
  if (opts.window) {
    rep.t_begin = opts.window->first;
    rep.t_end = opts.window->second;
  } else {
    if (std::isnan(traj.energy_max)) {
      throw Error(ErrorCode::invalid_argument,
                  "trajectory has no energy maximum; pass an explicit window");
    }
    auto it = std::find_if(traj.samples.begin(), traj.samples.end(), [&](const auto& s) {
      return traj.energy_max - s.energy < 1e-3;
    });
    if (it == traj.samples.end()) {
      throw Error(ErrorCode::invalid_argument, "energy residual never drops below 1e-3");
    }
    const double t0 = it->t;
    rep.t_end = traj.back().t;
    rep.t_begin = t0 + 0.5 * (rep.t_end - t0);
  }

  std::vector<const TrajectorySample*> window;
  for (const auto& s : traj.samples)
    if (s.t >= rep.t_begin && s.t <= rep.t_end) window.push_back(&s);
  if (window.size() < opts.min_samples) {
    throw Error(ErrorCode::invalid_argument,
                "window holds " + std::to_string(window.size()) + " samples; need at least " +
                    std::to_string(opts.min_samples));
  }

  std::vector<Matrix> qs;
  qs.reserve(window.size());
  for (const auto* s : window) qs.push_back(in_basis(s->q, opts.basis));

  const std::size_t n = qs.front().rows();
  const std::size_t p = qs.front().cols();
  if (rates.nu.size() < std::max(n, p)) {
    throw Error(ErrorCode::dimension_mismatch, "rate vector shorter than the trajectory size");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      EntryRate e;
      e.i = i;
      e.j = j;
      e.bound = -2.0 * rates.nu[std::min(i, j)];
      std::vector<double> xs, ys;
      for (std::size_t k = 0; k < qs.size(); ++k) {
        const double v = qs[k](i, j);
        const double r = std::abs(v * v - (i == j ? 1.0 : 0.0));
        if (r >= opts.floor) {
          xs.push_back(window[k]->t);
          ys.push_back(std::log(r));
        }
      }
      e.samples = xs.size();
      if (xs.size() < opts.min_samples) {
        e.slope = std::numeric_limits<double>::quiet_NaN();
        e.verdict = EntryVerdict::floor;
      } else {
        e.slope = least_squares_slope(xs, ys);
        e.verdict = e.slope <= e.bound * (1.0 - opts.slack) ? EntryVerdict::pass
                                                            : EntryVerdict::fail;
      }
      if (e.verdict == EntryVerdict::fail) rep.all_ok = false;
      rep.entries.push_back(e);
    }
  }
  return rep;
}

SigmaInvariance sigma_invariance_check(const Trajectory& traj, double tol,
                                       const std::optional<Matrix>& basis) {
  if (traj.empty()) throw Error(ErrorCode::invalid_argument, "empty trajectory");
  SigmaInvariance out;
  const SigmaAnalysis first = analyze_sigma(in_basis(traj.front().q, basis), tol);
  out.sigma0 = first.sigma;
  for (const auto& s : traj.samples) {
    SigmaAnalysis cur;
    try {
      cur = analyze_sigma(in_basis(s.q, basis), tol);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ambiguous && e.code() != ErrorCode::singular) throw;
      out.indeterminate_times.push_back(s.t);
      continue;
    }
    if (cur.sigma == out.sigma0) continue;
    if (cur.ambiguous || first.ambiguous) {
      out.indeterminate_times.push_back(s.t);
    } else if (!out.first_violation) {
      out.first_violation = s.t;
    }
  }
  if (out.first_violation) {
    out.verdict = InvarianceVerdict::violated;
  } else if (!out.indeterminate_times.empty()) {
    out.verdict = InvarianceVerdict::indeterminate;
  }
  return out;
}

}  // namespace ojaflow

#include "ojaflow/online.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ojaflow/error.hpp"
#include "ojaflow/stable_manifold.hpp"
#include "ojaflow/trajectory.hpp"

namespace ojaflow {

SampleStream::SampleStream(const SpectralMatrix& a, std::uint64_t seed)
    : v_(a.eigenvectors()),
      diagonal_(a.is_diagonal()),
      rng_(seed),
      unif_(-std::sqrt(3.0), std::sqrt(3.0)) {
  double tr = 0.0;
  for (double l : a.eigenvalues()) {
    root_.push_back(std::sqrt(l));
    tr += l;
  }
  radius_ = std::sqrt(3.0 * tr);
}

std::vector<double> SampleStream::next() {
  const std::size_t n = root_.size();
  std::vector<double> coef(n);
  for (std::size_t i = 0; i < n; ++i) coef[i] = unif_(rng_) * root_[i];
  ++count_;
  if (diagonal_) return coef;
  return v_ * std::span<const double>(coef);
}

double LearningSchedule::eta(std::size_t k) const {
  const double kk = static_cast<double>(k);
  double e = c;
  switch (rule) {
    case Rule::constant: break;
    case Rule::inverse_k: e = c / (k0 + kk); break;
    case Rule::inverse_k_power: e = c / std::pow(k0 + kk, gamma); break;
  }
  return std::max(e, floor);
}

double LearningSchedule::sup() const { return rule == Rule::constant ? std::max(c, floor) : eta(1); }

void LearningSchedule::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw Error(ErrorCode::invalid_argument, "schedule: base rate c must be > 0");
  }
  if (!(floor >= 0.0)) throw Error(ErrorCode::invalid_argument, "schedule: floor must be >= 0");
  if (rule != Rule::constant && !(k0 + 1.0 > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "schedule: k0 must exceed -1");
  }
  if (rule == Rule::inverse_k_power && !(gamma > 0.5 && gamma <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "schedule: exponent gamma must lie in (1/2, 1]");
  }
}

LearningSchedule LearningSchedule::defaults(const SpectralMatrix& a) {
  LearningSchedule s;
  s.c = 0.5 / a.eigenvalues().front();
  return s;
}

const char* to_string(LearningSchedule::Rule r) noexcept {
  switch (r) {
    case LearningSchedule::Rule::constant: return "constant";
    case LearningSchedule::Rule::inverse_k: return "inverse-k";
    case LearningSchedule::Rule::inverse_k_power: return "inverse-k-power";
  }
  return "?";
}

LearningSchedule::Rule parse_schedule_rule(const std::string& s) {
  if (s == "constant") return LearningSchedule::Rule::constant;
  if (s == "inverse-k") return LearningSchedule::Rule::inverse_k;
  if (s == "inverse-k-power") return LearningSchedule::Rule::inverse_k_power;
  throw Error(ErrorCode::invalid_argument,
              "unknown schedule rule '" + s + "' (constant | inverse-k | inverse-k-power)");
}

const char* to_string(OnlineMode m) noexcept { return m == OnlineMode::sga ? "sga" : "gso"; }

OnlineMode parse_online_mode(const std::string& s) {
  if (s == "sga") return OnlineMode::sga;
  if (s == "gso") return OnlineMode::gso;
  throw Error(ErrorCode::invalid_argument, "unknown online mode '" + s + "' (sga | gso)");
}

namespace {

void require_sample(const Matrix& w, std::span<const double> x) {
  if (x.size() != w.rows()) {
    throw Error(ErrorCode::dimension_mismatch, "sample length differs from W rows");
  }
}

[[noreturn]] void diverged(std::size_t k, std::span<const double> x) {
  throw Error(ErrorCode::divergence,
              "non-finite iterate at k = " + std::to_string(k) + " (|x| = " +
                  format_double(norm2(x)) + ")",
              k);
}

}  // namespace

void sga_step(EstimatorState& state, std::span<const double> x, double eta) {
  Matrix& w = state.w;
  require_sample(w, x);
  const std::size_t n = w.rows();
  const std::size_t p = w.cols();
  std::vector<double> y(p, 0.0);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t r = 0; r < n; ++r) y[j] += w(r, j) * x[r];

  Matrix next = w;
  std::vector<double> d(n);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t r = 0; r < n; ++r) d[r] = x[r] - y[j] * w(r, j);
    for (std::size_t i = 0; i < j; ++i) {
      const double c = 2.0 * y[i];
      for (std::size_t r = 0; r < n; ++r) d[r] -= c * w(r, i);
    }
    const double s = eta * y[j];
    for (std::size_t r = 0; r < n; ++r) next(r, j) = w(r, j) + s * d[r];
  }
  ++state.k;
  if (!next.all_finite()) diverged(state.k, x);
  w = std::move(next);
}

void gso_step(EstimatorState& state, std::span<const double> x, double eta) {
  Matrix& w = state.w;
  require_sample(w, x);
  const std::size_t n = w.rows();
  const std::size_t p = w.cols();
  Matrix tilde = w;
  for (std::size_t j = 0; j < p; ++j) {
    double y = 0.0;
    for (std::size_t r = 0; r < n; ++r) y += w(r, j) * x[r];
    for (std::size_t r = 0; r < n; ++r) tilde(r, j) += eta * y * x[r];
  }
  ++state.k;
  if (!tilde.all_finite()) diverged(state.k, x);
  try {
    w = gram_schmidt_qr(tilde).q;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::rank_deficient) throw;
    throw Error(ErrorCode::divergence,
                "rank collapse of W~ at k = " + std::to_string(state.k) + ": " + e.what(),
                state.k);
  }
}

std::vector<std::size_t> alignment_targets(const SpectralMatrix& a, const Matrix& w) {
  std::vector<std::size_t> t(w.cols());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = i;
  if (!w.is_square()) return t;
  const Matrix basis = a.is_diagonal() ? w : a.eigenvectors().transpose() * w;
  const auto pred = predict_limit(StiefelPoint(gram_schmidt_qr(basis).q));
  for (std::size_t m = 0; m < pred.sigma.size(); ++m) t[pred.sigma[m]] = m;
  return t;
}

std::vector<double> alignment_error(const Matrix& w, const SpectralMatrix& a,
                                    const std::vector<std::size_t>& targets) {
  const Matrix& v = a.eigenvectors();
  std::vector<double> out(w.cols());
  for (std::size_t i = 0; i < w.cols(); ++i) {
    const std::size_t t = targets.at(i);
    double along = 0.0;
    for (std::size_t r = 0; r < w.rows(); ++r) along += w(r, i) * v(r, t);
    double perp = 0.0;
    for (std::size_t r = 0; r < w.rows(); ++r) {
      const double e = w(r, i) - along * v(r, t);
      perp += e * e;
    }
    out[i] = std::atan2(std::sqrt(perp), std::abs(along));
  }
  return out;
}

std::vector<double> alignment_error(const Matrix& w, const SpectralMatrix& a) {
  return alignment_error(w, a, alignment_targets(a, w));
}

OnlineResult run_online(SampleStream& stream, const SpectralMatrix& a,
                        const LearningSchedule& schedule, const Matrix& w0, std::size_t steps,
                        OnlineMode mode, std::size_t stride) {
  schedule.validate();
  if (stride == 0) throw Error(ErrorCode::invalid_argument, "stride must be >= 1");
  if (w0.rows() != a.n() || w0.cols() == 0 || w0.cols() > a.n()) {
    throw Error(ErrorCode::dimension_mismatch, "W0 must be n x p with 1 <= p <= n");
  }
  if (orthogonality_defect(w0) > 1e-10) {
    throw Error(ErrorCode::not_orthogonal, "W0 must have orthonormal columns");
  }
  if (mode == OnlineMode::sga) {
    const double bound = schedule.sup() * stream.radius() * stream.radius();
    if (!(bound < 0.5)) {
      throw Error(ErrorCode::invalid_argument,
                  "schedule too aggressive for sga mode: sup eta_k * M^2 = " +
                      format_double(bound) + " must be < 0.5");
    }
  }

  OnlineResult res;
  res.state.w = w0;
  res.targets = alignment_targets(a, w0);
  auto record = [&](double eta) {
    const auto ang = alignment_error(res.state.w, a, res.targets);
    const double defect = orthogonality_defect(res.state.w);
    for (std::size_t i = 0; i < ang.size(); ++i)
      res.series.push_back({res.state.k, eta, i + 1, ang[i], defect});
  };
  record(0.0);
  for (std::size_t k = 1; k <= steps; ++k) {
    const auto x = stream.next();
    const double eta = schedule.eta(k);
    if (mode == OnlineMode::sga) {
      sga_step(res.state, x, eta);
    } else {
      gso_step(res.state, x, eta);
    }
    if (k % stride == 0 || k == steps) record(eta);
  }
  return res;
}

KendallTrend kendall_trend(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 3) throw Error(ErrorCode::invalid_argument, "trend test needs at least 3 points");
  long long s = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += (y[j] > y[i]) - (y[j] < y[i]);
  const double nn = static_cast<double>(n);
  KendallTrend out;
  out.tau = static_cast<double>(s) / (nn * (nn - 1.0) / 2.0);
  const double var = nn * (nn - 1.0) * (2.0 * nn + 5.0) / 18.0;
  out.z = static_cast<double>(s) / std::sqrt(var);
  out.p_value = std::erfc(std::abs(out.z) / std::sqrt(2.0));
  return out;
}

void write_online_csv(std::ostream& os, const std::vector<OnlineRecord>& series) {
  os << "k,eta,col,angle_rad,orth_defect\n";
  for (const auto& r : series) {
    os << r.k << ',' << format_double(r.eta) << ',' << r.col << ',' << format_double(r.angle)
       << ',' << format_double(r.orth_defect) << '\n';
  }
}

}  // namespace ojaflow

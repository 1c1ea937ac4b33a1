#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ojaflow/linalg.hpp"
#include "ojaflow/matrix.hpp"
#include "ojaflow/random.hpp"

namespace ojaflow {

/// x = Σ_i s_i √λ_i v_i with s_i i.i.d. uniform on [−√3, √3]: covariance
/// exactly A, support radius √(3·tr A).
class SampleStream {
 public:
  SampleStream(const SpectralMatrix& a, std::uint64_t seed);

  std::vector<double> next();
  std::size_t n() const noexcept { return root_.size(); }
  std::size_t count() const noexcept { return count_; }
  double radius() const noexcept { return radius_; }

 private:
  std::vector<double> root_;  // √λ_i
  Matrix v_;
  bool diagonal_;
  double radius_;
  Rng rng_;
  std::uniform_real_distribution<double> unif_;
  std::size_t count_ = 0;
};

struct LearningSchedule {
  enum class Rule { constant, inverse_k, inverse_k_power };

  Rule rule = Rule::inverse_k;
  double c = 0.5;
  double k0 = 100.0;
  double gamma = 1.0;
  double floor = 0.0;

  /// η_k for k ≥ 1.
  double eta(std::size_t k) const;
  /// sup_{k≥1} η_k
  double sup() const;
  void validate() const;

  /// c = 0.5/λ₁, k0 = 100, inverse-k.
  static LearningSchedule defaults(const SpectralMatrix& a);
};

const char* to_string(LearningSchedule::Rule r) noexcept;
LearningSchedule::Rule parse_schedule_rule(const std::string& s);

struct EstimatorState {
  Matrix w;
  std::size_t k = 0;
};

/// w_j += η y_j (x − y_j w_j − 2 Σ_{i<j} y_i w_i), y = Wᵀx on the previous
/// iterate. Column j reads only columns 1..j.
void sga_step(EstimatorState& state, std::span<const double> x, double eta);
/// W ← GS(W + η x xᵀW)
void gso_step(EstimatorState& state, std::span<const double> x, double eta);

enum class OnlineMode { sga, gso };
const char* to_string(OnlineMode m) noexcept;
OnlineMode parse_online_mode(const std::string& s);

struct OnlineRecord {
  std::size_t k = 0;
  double eta = 0.0;
  std::size_t col = 0;  // 1-based
  double angle = 0.0;
  double orth_defect = 0.0;
};

struct OnlineResult {
  EstimatorState state;
  std::vector<OnlineRecord> series;
  std::vector<std::size_t> targets;  // eigenvector index per column, 0-based
};

/// Target eigenvector per column: from predict_limit(VᵀW) when W is square,
/// identity otherwise.
std::vector<std::size_t> alignment_targets(const SpectralMatrix& a, const Matrix& w);

/// Sign-agnostic angle between column i and its target eigenvector line.
std::vector<double> alignment_error(const Matrix& w, const SpectralMatrix& a,
                                    const std::vector<std::size_t>& targets);
std::vector<double> alignment_error(const Matrix& w, const SpectralMatrix& a);

/// Runs `steps` iterations. In sga mode the schedule must satisfy
/// sup η_k·M² < 1/2. Records diagnostics at k = 0, every `stride`, and the end.
/// Throws divergence (index = k) on a non-finite iterate.
OnlineResult run_online(SampleStream& stream, const SpectralMatrix& a,
                        const LearningSchedule& schedule, const Matrix& w0, std::size_t steps,
                        OnlineMode mode, std::size_t stride = 1000);

struct KendallTrend {
  double tau = 0.0;
  double z = 0.0;
  double p_value = 1.0;  // two-sided, normal approximation
};
KendallTrend kendall_trend(std::span<const double> y);

/// Header `k,eta,col,angle_rad,orth_defect`.
void write_online_csv(std::ostream& os, const std::vector<OnlineRecord>& series);

}  // namespace ojaflow

#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

#include "ojaflow/closed_form.hpp"
#include "ojaflow/error.hpp"
#include "ojaflow/stable_manifold.hpp"

namespace ojaflow::cli {

namespace {

namespace fs = std::filesystem;

constexpr double kMonotoneSlack = 1e-10;
constexpr double kOrthogonalityTol = 1e-8;
constexpr double kRiccatiTol = 1e-7;
constexpr double kTrendSignificance = 0.01;
constexpr double kBoundedNorm = 2.0;

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(m.row(i));
  return rows;
}

Json checked(double value, double tolerance) {
  return Json{{"value", value}, {"tolerance", tolerance}};
}

Json one_based(const std::vector<std::size_t>& v) {
  Json out = Json::array();
  for (std::size_t x : v) out.push_back(x + 1);
  return out;
}

Json error_json(const Error& e) {
  Json j{{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
  if (e.index()) j["index"] = *e.index();
  if (e.limit()) j["limit"] = *e.limit();
  return j;
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::ambiguous: return kExitAmbiguous;
    case ErrorCode::invalid_argument:
    case ErrorCode::dimension_mismatch:
    case ErrorCode::not_symmetric:
    case ErrorCode::not_orthogonal: return kExitConfig;
    default: return kExitNumerical;
  }
}

fs::path out_dir(const Json& cfg) {
  fs::path dir = cfg["out"].get<std::string>();
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("out: cannot write " + path.string());
  return os;
}

std::string run_file(const std::string& stem, std::size_t runs, std::size_t r) {
  return runs == 1 ? stem + ".csv" : stem + "_" + std::to_string(r) + ".csv";
}

Json base_summary(std::string_view command, const Json& cfg) {
  return Json{{"schema", kSummarySchema}, {"command", command}, {"config", cfg}};
}

FlowSystem make_flow(const Json& cfg, const SpectralMatrix& a, const WeightVector& w) {
  const std::string flow = cfg["flow"].get<std::string>();
  if (flow == "brockett") return brockett_system(a, w);
  if (flow == "llg-tildeg") return llg_tildeg_system(a, w, build_skew(cfg, a.n()));
  if (flow == "llg-euclid") return llg_euclid_system(a, w, build_skew(cfg, a.n()));
  return sga_system(a, w);
}

// Largest sample-to-sample energy decrease; the flows here all ascend E.
double max_energy_drop(const Trajectory& traj) {
  double drop = 0.0;
  for (std::size_t i = 1; i < traj.samples.size(); ++i)
    drop = std::max(drop, traj.samples[i - 1].energy - traj.samples[i].energy);
  return drop;
}

Json trajectory_diagnostics(const Trajectory& traj, double threshold) {
  double defect = 0.0;
  for (const auto& s : traj.samples) defect = std::max(defect, s.orth_defect);
  const double drop = max_energy_drop(traj);
  Json j;
  j["converged"] = traj.converged;
  j["steps"] = traj.steps;
  j["t_end"] = traj.back().t;
  j["energy"] = Json{{"initial", traj.front().energy},
                     {"final", traj.back().energy},
                     {"max", traj.energy_max}};
  j["energy_monotone"] = Json{{"max_decrease", drop},
                              {"tolerance", kMonotoneSlack},
                              {"pass", drop <= kMonotoneSlack}};
  j["orth_defect_max"] = checked(defect, kOrthogonalityTol);
  j["field_norm_final"] = checked(traj.back().field_norm, threshold);
  return j;
}

Json prediction_json(const LimitPrediction& p) {
  Json pre = Json::array();
  for (const auto& i : p.prefixes) pre.push_back(one_based(i));
  return Json{{"sigma", one_based(p.sigma)}, {"prefixes", pre},    {"z", p.z},
              {"signs", p.signs},            {"limit", to_json(p.limit)}};
}

struct RunOutcome {
  Json json;
  int exit_code = kExitOk;
};

}  // namespace

CommandResult cmd_simulate(const Json& cfg) {
  const SpectralMatrix a = build_spectrum(cfg);
  const WeightVector w = build_weights(cfg);
  const IntegratorConfig ic = build_integrator(cfg);
  const FlowSystem flow = make_flow(cfg, a, w);
  const std::size_t runs = cfg["runs"].get<std::size_t>();
  const std::size_t jobs = cfg["jobs"].get<std::size_t>();
  const bool square = cfg["p"].get<std::size_t>() == a.n();
  const fs::path dir = out_dir(cfg);

  std::vector<Matrix> starts;
  for (std::size_t r = 0; r < runs; ++r) starts.push_back(build_q0(cfg, a, r));

  auto outcomes = run_batch(runs, jobs, [&](std::size_t r) {
    RunOutcome out;
    Json& j = out.json;
    j["run"] = r;
    j["q0"] = to_json(starts[r]);
    try {
      Trajectory traj;
      if (square) {
        LimitResult res = integrate_to_limit(flow, a, starts[r], ic);
        traj = std::move(res.trajectory);
        j.update(trajectory_diagnostics(traj, ic.convergence_threshold));
        j["limit"] = Json{{"raw", to_json(res.raw)},
                          {"nearest", to_json(res.nearest.realized)},
                          {"distance", checked(res.nearest.distance, kLimitDistanceTol)},
                          {"in_E", res.nearest.distance < kLimitDistanceTol},
                          {"stable", res.nearest.element.is_identity_permutation()}};
        if (flow.name == "sga") {
          try {
            const LimitPrediction pred = predict_limit(a, StiefelPoint(starts[r]));
            Json pj = prediction_json(pred);
            const double residual = max_abs_diff(res.raw, pred.limit);
            pj["match_residual"] = checked(residual, kLimitDistanceTol);
            pj["match"] = residual <= kLimitDistanceTol;
            j["prediction"] = pj;
          } catch (const Error& e) {
            j["prediction"] = Json{{"error", error_json(e)}};
          }
        }
      } else {
        traj = integrate(flow, starts[r], ic);
        j.update(trajectory_diagnostics(traj, ic.convergence_threshold));
      }
      const std::string file = run_file("trajectory", runs, r);
      auto os = open_csv(dir / file);
      write_trajectory_csv(os, traj);
      j["trajectory_csv"] = file;
      if (!traj.converged) out.exit_code = kExitNumerical;
    } catch (const Error& e) {
      j["error"] = error_json(e);
      out.exit_code = exit_code_for(e.code());
    }
    return out;
  });

  CommandResult res;
  res.summary = base_summary("simulate", cfg);
  res.summary["tolerances"] = Json{{"convergence_threshold", ic.convergence_threshold},
                                   {"limit_distance", kLimitDistanceTol},
                                   {"energy_monotone", kMonotoneSlack},
                                   {"orthogonality", kOrthogonalityTol}};
  Json list = Json::array();
  for (auto& o : outcomes) {
    list.push_back(std::move(o.json));
    res.exit_code = std::max(res.exit_code, o.exit_code);
  }
  res.summary["runs"] = std::move(list);
  return res;
}

CommandResult cmd_predict(const Json& cfg) {
  const SpectralMatrix a = build_spectrum(cfg);
  const Matrix q0 = build_q0(cfg, a, 0);
  CommandResult res;
  res.summary = base_summary("predict", cfg);
  res.summary["tolerances"] = Json{{"sigma_relative_minor", kSigmaTol},
                                   {"limit_distance", kLimitDistanceTol}};
  res.summary["q0"] = to_json(q0);
  LimitPrediction pred;
  try {
    pred = predict_limit(a, StiefelPoint(q0));
  } catch (const Error& e) {
    Json err = error_json(e);
    if (e.code() == ErrorCode::ambiguous && e.index()) err["stage"] = *e.index() + 1;
    res.summary["error"] = err;
    res.exit_code = exit_code_for(e.code());
    return res;
  }
  res.summary["prediction"] = prediction_json(pred);
  const Matrix local = a.is_diagonal() ? q0 : a.eigenvectors().transpose() * q0;
  res.summary["stable_basin"] = is_stable_basin(local);

  if (cfg["verify"].get<bool>()) {
    const IntegratorConfig ic = build_integrator(cfg);
    try {
      LimitResult lim = integrate_to_limit(sga_system(a, build_weights(cfg)), a, q0, ic);
      const double residual = max_abs_diff(lim.raw, pred.limit);
      auto os = open_csv(out_dir(cfg) / "trajectory.csv");
      write_trajectory_csv(os, lim.trajectory);
      res.summary["verify"] = Json{{"converged", lim.converged},
                                   {"t_end", lim.trajectory.back().t},
                                   {"raw", to_json(lim.raw)},
                                   {"residual", checked(residual, kLimitDistanceTol)},
                                   {"match", residual <= kLimitDistanceTol},
                                   {"trajectory_csv", "trajectory.csv"}};
      if (!lim.converged) res.exit_code = kExitNumerical;
    } catch (const Error& e) {
      res.summary["verify"] = Json{{"error", error_json(e)}};
      res.exit_code = exit_code_for(e.code());
    }
  }
  return res;
}

CommandResult cmd_rates(const Json& cfg) {
  const SpectralMatrix a = build_spectrum(cfg);
  const WeightVector w = build_weights(cfg);
  const IntegratorConfig ic = build_integrator(cfg);
  const RateVector rates = convergence_rates(a);
  const std::size_t runs = cfg["runs"].get<std::size_t>();
  ExponentialOptions opts;
  opts.slack = cfg["slack"].get<double>();
  opts.floor = cfg["floor"].get<double>();
  if (!a.is_diagonal()) opts.basis = a.eigenvectors();
  const fs::path dir = out_dir(cfg);

  std::vector<Matrix> starts;
  for (std::size_t r = 0; r < runs; ++r) {
    starts.push_back(build_q0(cfg, a, r));
    const Matrix local = a.is_diagonal() ? starts[r] : a.eigenvectors().transpose() * starts[r];
    if (!is_stable_basin(local)) {
      throw ConfigError("q0: run " + std::to_string(r) +
                        " starts outside the stable basin (a leading principal minor vanishes)");
    }
  }

  auto outcomes = run_batch(runs, cfg["jobs"].get<std::size_t>(), [&](std::size_t r) {
    RunOutcome out;
    Json& j = out.json;
    j["run"] = r;
    try {
      const Trajectory traj = integrate(sga_system(a, w), starts[r], ic);
      j.update(trajectory_diagnostics(traj, ic.convergence_threshold));
      if (!traj.converged) {
        out.exit_code = kExitNumerical;
        return out;
      }
      const ExponentialReport rep = verify_exponential(traj, rates, opts);
      const std::string file = run_file("rates", runs, r);
      auto os = open_csv(dir / file);
      os << "i,j,slope,bound,threshold,samples,verdict\n";
      Json entries = Json::array();
      for (const auto& e : rep.entries) {
        const double threshold = e.bound * (1.0 - opts.slack);
        os << e.i + 1 << ',' << e.j + 1 << ',' << format_double(e.slope) << ','
           << format_double(e.bound) << ',' << format_double(threshold) << ',' << e.samples
           << ',' << to_string(e.verdict) << '\n';
        Json ej{{"i", e.i + 1},         {"j", e.j + 1},          {"bound", e.bound},
                {"threshold", threshold}, {"samples", e.samples}, {"verdict", to_string(e.verdict)}};
        ej["slope"] = std::isnan(e.slope) ? Json(nullptr) : Json(e.slope);
        entries.push_back(std::move(ej));
      }
      j["window"] = Json::array({rep.t_begin, rep.t_end});
      j["entries"] = std::move(entries);
      j["all_ok"] = rep.all_ok;
      j["rates_csv"] = file;
    } catch (const Error& e) {
      j["error"] = error_json(e);
      out.exit_code = exit_code_for(e.code());
    }
    return out;
  });

  CommandResult res;
  res.summary = base_summary("rates", cfg);
  res.summary["tolerances"] = Json{{"slack", opts.slack}, {"floor", opts.floor},
                                   {"min_samples", opts.min_samples}};
  res.summary["nu"] = rates.nu;
  Json list = Json::array();
  for (auto& o : outcomes) {
    list.push_back(std::move(o.json));
    res.exit_code = std::max(res.exit_code, o.exit_code);
  }
  res.summary["runs"] = std::move(list);
  return res;
}

CommandResult cmd_online(const Json& cfg) {
  const SpectralMatrix a = build_spectrum(cfg);
  const LearningSchedule schedule = build_schedule(cfg);
  const std::size_t n = a.n();
  const std::size_t p = cfg["p"].get<std::size_t>();
  const std::size_t steps = cfg["steps"].get<std::size_t>();
  const std::size_t stride = cfg["stride"].get<std::size_t>();
  const OnlineMode mode = parse_online_mode(cfg["mode"].get<std::string>());
  const double tol = cfg["angle_tolerance"].get<double>();
  const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();
  const Matrix w0 = build_w0(cfg, n, p);

  CommandResult res;
  res.summary = base_summary("online", cfg);
  res.summary["tolerances"] = Json{{"angle", tol},
                                   {"trend_significance", kTrendSignificance},
                                   {"bounded_column_norm", kBoundedNorm}};
  OnlineResult run;
  try {
    SampleStream stream(a, seed);
    run = run_online(stream, a, schedule, w0, steps, mode, stride);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_argument) throw ConfigError(std::string("schedule: ") + e.what());
    Json err = error_json(e);
    if (e.code() == ErrorCode::divergence && e.index()) err["last_finite_k"] = *e.index() - 1;
    res.summary["error"] = err;
    res.exit_code = exit_code_for(e.code());
    return res;
  }

  auto os = open_csv(out_dir(cfg) / "online.csv");
  write_online_csv(os, run.series);
  res.summary["online_csv"] = "online.csv";
  res.summary["steps"] = run.state.k;

  const auto angles = alignment_error(run.state.w, a, run.targets);
  Json cols = Json::array();
  bool all = true;
  double max_norm = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    max_norm = std::max(max_norm, norm2(run.state.w.column(i)));
    const bool ok = angles[i] < tol;
    all = all && ok;
    cols.push_back(Json{{"col", i + 1}, {"target", run.targets[i] + 1},
                        {"angle", angles[i]}, {"tolerance", tol}, {"pass", ok}});
  }
  res.summary["final_angles"] = std::move(cols);
  res.summary["all_within_tolerance"] = all;
  res.summary["orth_defect_final"] = orthogonality_defect(run.state.w);
  res.summary["max_column_norm"] = checked(max_norm, kBoundedNorm);

  const double burn = cfg["burn_in"].get<double>() * static_cast<double>(steps);
  Json trend = Json::array();
  for (std::size_t c = 1; c <= p; ++c) {
    std::vector<double> ys;
    for (const auto& rec : run.series)
      if (rec.col == c && static_cast<double>(rec.k) >= burn) ys.push_back(rec.angle);
    if (ys.size() < 3) {
      trend.push_back(Json{{"col", c}, {"points", ys.size()}, {"decreasing", nullptr}});
      continue;
    }
    const KendallTrend k = kendall_trend(ys);
    trend.push_back(Json{{"col", c},
                         {"points", ys.size()},
                         {"tau", k.tau},
                         {"p_value", k.p_value},
                         {"significance", kTrendSignificance},
                         {"decreasing", k.tau < 0.0 && k.p_value < kTrendSignificance}});
  }
  res.summary["trend"] = std::move(trend);

  if (mode == OnlineMode::sga && p < n && cfg["decoupling_check"].get<bool>()) {
    Json dec;
    if (!cfg["w0"].is_string()) {
      dec["status"] = "skipped";
      dec["reason"] = "explicit w0 has no canonical completion";
    } else {
      // Same stream, same leading columns, extra trailing columns: the SGA
      // update is column-triangular, so the shared columns must agree bitwise.
      SampleStream stream(a, seed);
      const OnlineResult full =
          run_online(stream, a, schedule, build_w0(cfg, n, n), steps, mode, steps + 1);
      const bool exact = full.state.w.leading_columns(p) == run.state.w;
      dec["status"] = exact ? "exact" : "differs";
      dec["columns"] = p;
      dec["max_abs_diff"] = max_abs_diff(full.state.w.leading_columns(p), run.state.w);
    }
    res.summary["decoupling"] = std::move(dec);
  }
  return res;
}

CommandResult cmd_riccati(const Json& cfg) {
  const SpectralMatrix a = build_spectrum(cfg);
  const IntegratorConfig ic = build_integrator(cfg);
  const Matrix p0 = build_p0(cfg, a.n());
  const double slack = cfg["slack"].get<double>();
  const double floor = cfg["floor"].get<double>();

  CommandResult res;
  res.summary = base_summary("riccati", cfg);
  res.summary["tolerances"] = Json{{"closed_form", kRiccatiTol}, {"slack", slack}, {"floor", floor}};
  res.summary["p0"] = to_json(p0);
  try {
    const auto traj = integrate_riccati(a, p0, ic);
    auto os = open_csv(out_dir(cfg) / "riccati.csv");
    const std::size_t n = a.n();
    os << "t";
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 1; j <= n; ++j) os << ",p_" << i << '_' << j;
    os << ",closed_form_deviation,distance_to_identity\n";
    double worst = 0.0;
    const Matrix id = Matrix::identity(n);
    for (const auto& s : traj) {
      const double dev = (s.p - riccati_closed_form(a, p0, s.t)).frobenius_norm();
      worst = std::max(worst, dev);
      os << format_double(s.t);
      for (double v : s.p.data()) os << ',' << format_double(v);
      os << ',' << format_double(dev) << ',' << format_double((s.p - id).frobenius_norm()) << '\n';
    }
    const RiccatiDecay d = riccati_decay(a, traj, slack, floor);
    res.summary["riccati_csv"] = "riccati.csv";
    res.summary["closed_form"] = Json{{"max_deviation", checked(worst, kRiccatiTol)},
                                      {"pass", worst <= kRiccatiTol}};
    Json decay{{"alpha", d.alpha},
               {"lambda_n", a.eigenvalues().back()},
               {"bound", d.bound},
               {"threshold", d.bound * (1.0 - slack)},
               {"samples", d.samples}};
    decay["slope"] = d.at_floor ? Json(nullptr) : Json(d.slope);
    decay["verdict"] = d.at_floor ? "floor" : (d.pass ? "pass" : "fail");
    res.summary["decay"] = std::move(decay);
  } catch (const Error& e) {
    res.summary["error"] = error_json(e);
    res.exit_code = exit_code_for(e.code());
  }
  return res;
}

CommandResult run_command(std::string_view command, const Json& cfg) {
  CommandResult res;
  if (command == "simulate") res = cmd_simulate(cfg);
  else if (command == "predict") res = cmd_predict(cfg);
  else if (command == "rates") res = cmd_rates(cfg);
  else if (command == "online") res = cmd_online(cfg);
  else if (command == "riccati") res = cmd_riccati(cfg);
  else throw ConfigError("command: unknown command '" + std::string(command) + "'");
  res.summary["exit_code"] = res.exit_code;
  const fs::path path = out_dir(cfg) / (std::string(command) + ".json");
  std::ofstream os(path);
  if (!os) throw ConfigError("out: cannot write " + path.string());
  os << res.summary.dump(2) << '\n';
  return res;
}

}  // namespace ojaflow::cli

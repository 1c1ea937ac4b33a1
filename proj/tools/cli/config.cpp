#include "cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "ojaflow/error.hpp"
#include "ojaflow/random.hpp"

namespace ojaflow::cli {

namespace {

// Independent random streams per purpose, all derived from the user seed.
enum class Stream : std::uint32_t { basis = 1, q0 = 2, w0 = 3, p0 = 4, skew = 5 };

Rng seeded(std::uint64_t seed, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s)};
  return Rng(seq);
}

Json integrator_defaults() {
  return Json{{"method", "rk4-projected"}, {"dt", 0.01},
              {"projection_interval", 1},   {"t_max", "auto"},
              {"convergence_threshold", 1e-10}, {"sample_stride", 10},
              {"max_defect", 1e-4}};
}

bool is_auto(const Json& v) { return v.is_string() && v.get<std::string>() == "auto"; }

[[noreturn]] void fail(std::string_view field, const std::string& msg) {
  throw ConfigError(std::string(field) + ": " + msg);
}

const Json& at(const Json& cfg, std::string_view path) {
  const Json* cur = &cfg;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key(path.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (!cur->is_object() || !cur->contains(key)) fail(path, "missing");
    cur = &(*cur)[key];
    if (dot == std::string_view::npos) return *cur;
    start = dot + 1;
  }
}

double number(const Json& cfg, std::string_view path) {
  const Json& v = at(cfg, path);
  if (!v.is_number()) fail(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "must be finite");
  return d;
}

double positive(const Json& cfg, std::string_view path) {
  const double d = number(cfg, path);
  if (!(d > 0.0)) fail(path, "must be > 0");
  return d;
}

std::uint64_t count(const Json& cfg, std::string_view path, std::uint64_t min = 0) {
  const Json& v = at(cfg, path);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    fail(path, "expected a non-negative integer");
  }
  const auto c = v.get<std::uint64_t>();
  if (c < min) fail(path, "must be >= " + std::to_string(min));
  return c;
}

std::string text(const Json& cfg, std::string_view path) {
  const Json& v = at(cfg, path);
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> number_array(const Json& v, std::string_view path) {
  if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(path, "expected a non-empty array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Matrix matrix_from_json(const Json& v, std::string_view path) {
  if (!v.is_array() || v.empty()) fail(path, "expected an array of rows");
  const std::size_t rows = v.size();
  std::size_t cols = 0;
  std::vector<double> data;
  for (const auto& row : v) {
    const auto r = number_array(row, path);
    if (cols == 0) cols = r.size();
    if (r.size() != cols) fail(path, "rows have different lengths");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(rows, cols, std::move(data));
}

// Rejects keys the defaults do not know, recursively.
void check_keys(const Json& cfg, const Json& defaults, const std::string& prefix) {
  for (const auto& [key, value] : cfg.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!defaults.contains(key)) fail(path, "unknown key");
    if (defaults[key].is_object()) {
      if (!value.is_object()) fail(path, "expected an object");
      check_keys(value, defaults[key], path);
    }
  }
}

// The dimension implied by whichever inputs pin it down; conflicts are errors.
std::size_t resolve_n(const Json& cfg) {
  std::vector<std::pair<std::string, std::size_t>> claims;
  if (!is_auto(cfg["n"])) claims.emplace_back("n", count(cfg, "n", 1));
  if (cfg["eigenvalues"].is_array()) claims.emplace_back("eigenvalues", cfg["eigenvalues"].size());
  for (const char* key : {"q0", "w0", "p0"}) {
    if (!cfg.contains(key)) continue;
    const Json& v = cfg[key];
    if (v.is_array()) claims.emplace_back(key, v.size());
    if (v.is_string() && v.get<std::string>() == "paper-example-Q1") claims.emplace_back(key, 4);
  }
  if (claims.empty()) return 4;
  for (const auto& [field, value] : claims) {
    if (value != claims.front().second) {
      fail(field, "implies n = " + std::to_string(value) + " but " + claims.front().first +
                      " implies n = " + std::to_string(claims.front().second));
    }
  }
  return claims.front().second;
}

template <class F>
auto wrap(std::string_view field, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    fail(field, e.what());
  }
}

}  // namespace

bool is_command(std::string_view name) {
  return std::find(std::begin(kCommands), std::end(kCommands), name) != std::end(kCommands);
}

Json default_config(std::string_view command) {
  Json c{{"seed", 1},           {"out", "ojaflow-out"},  {"jobs", 1},
         {"n", "auto"},         {"eigenvalues", "uniform-gap"},
         {"basis", "diagonal"}, {"weights", "default"}};
  if (command == "simulate") {
    c["flow"] = "sga";
    c["p"] = "auto";
    c["q0"] = "random";
    c["runs"] = 1;
    c["integrator"] = integrator_defaults();
    c["skew"] = Json{{"kind", "zero"}, {"scale", 1.0}};
  } else if (command == "predict") {
    c["q0"] = "random";
    c["verify"] = false;
    c["integrator"] = integrator_defaults();
  } else if (command == "rates") {
    c["q0"] = "random";
    c["runs"] = 1;
    c["slack"] = 0.1;
    c["floor"] = 1e-12;
    c["integrator"] = integrator_defaults();
    // Stop while entries are still well above the floor so the fit window
    // carries signal.
    c["integrator"]["convergence_threshold"] = 1e-6;
    c["integrator"]["sample_stride"] = 5;
  } else if (command == "online") {
    c["p"] = "auto";
    c["w0"] = "random";
    c["steps"] = 200000;
    c["mode"] = "sga";
    c["stride"] = 1000;
    c["burn_in"] = 0.05;
    c["angle_tolerance"] = 0.1;
    c["decoupling_check"] = true;
    c["schedule"] = Json{{"rule", "inverse-k"}, {"c", "auto"}, {"k0", 100.0},
                         {"gamma", 1.0},        {"floor", 0.0}};
  } else if (command == "riccati") {
    c["p0"] = "random-rank-n";
    c["slack"] = 0.1;
    c["floor"] = 1e-12;
    c["integrator"] = integrator_defaults();
    // The Riccati field is stiffer than the SGA field by a factor ~‖P0‖.
    c["integrator"]["method"] = "rk4";
    c["integrator"]["dt"] = 0.001;
    c["integrator"]["t_max"] = 10.0;
    c["integrator"]["sample_stride"] = 100;
  } else {
    throw ConfigError("command: unknown command '" + std::string(command) + "'");
  }
  return c;
}

Json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config: cannot open " + path.string());
  try {
    Json j = Json::parse(in);
    if (!j.is_object()) throw ConfigError("--config: top level must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("--config: " + std::string(e.what()));
  }
}

Json resolve_config(std::string_view command, const Json& file, const Json& flags) {
  const Json defaults = default_config(command);
  check_keys(file, defaults, "");
  check_keys(flags, defaults, "");
  Json cfg = defaults;
  cfg.merge_patch(file);
  cfg.merge_patch(flags);
  check_keys(cfg, defaults, "");
  for (const auto& [key, value] : defaults.items()) {
    if (!cfg.contains(key)) fail(key, "missing (null removes a key; use the default instead)");
    if (value.is_object()) {
      for (const auto& [sub, unused] : value.items())
        if (!cfg[key].contains(sub)) fail(key + "." + sub, "missing");
    }
  }

  count(cfg, "seed");
  text(cfg, "out");
  count(cfg, "jobs", 1);
  const std::size_t n = resolve_n(cfg);
  cfg["n"] = n;

  if (is_auto(cfg["eigenvalues"]) || cfg["eigenvalues"] == "uniform-gap") {
    Json l = Json::array();
    for (std::size_t i = n; i >= 1; --i) l.push_back(static_cast<double>(i));
    cfg["eigenvalues"] = l;
  }
  number_array(cfg["eigenvalues"], "eigenvalues");
  if (cfg["weights"] == "default") {
    Json w = Json::array();
    for (std::size_t i = n; i >= 1; --i) w.push_back(static_cast<double>(i));
    cfg["weights"] = w;
  }
  if (number_array(cfg["weights"], "weights").size() != n) fail("weights", "need n entries");
  const std::string basis = text(cfg, "basis");
  if (basis != "diagonal" && basis != "random") fail("basis", "expected diagonal | random");

  const SpectralMatrix a = build_spectrum(cfg);
  const WeightVector w = build_weights(cfg);

  if (cfg.contains("p")) {
    if (is_auto(cfg["p"])) cfg["p"] = n;
    const auto p = count(cfg, "p", 1);
    if (p > n) fail("p", "must be <= n");
  }
  if (cfg.contains("runs")) count(cfg, "runs", 1);
  if (cfg.contains("slack")) {
    const double s = number(cfg, "slack");
    if (!(s >= 0.0 && s < 1.0)) fail("slack", "must lie in [0, 1)");
  }
  if (cfg.contains("floor")) positive(cfg, "floor");

  if (cfg.contains("integrator")) {
    Json& ic = cfg["integrator"];
    if (is_auto(ic["t_max"])) {
      double horizon = 0.0;
      const std::string flow = cfg.contains("flow") ? text(cfg, "flow") : "sga";
      if (flow == "brockett") horizon = brockett_system(a, w).default_t_max;
      else if (flow == "llg-euclid") horizon = llg_euclid_system(a, w, SkewFieldSpec::zero(n)).default_t_max;
      else horizon = sga_system(a, w).default_t_max;
      ic["t_max"] = horizon;
    }
    build_integrator(cfg);
  }

  if (command == "simulate") {
    const std::string flow = text(cfg, "flow");
    if (flow != "sga" && flow != "brockett" && flow != "llg-tildeg" && flow != "llg-euclid") {
      fail("flow", "expected sga | brockett | llg-tildeg | llg-euclid");
    }
    if (flow != "sga" && cfg["p"].get<std::size_t>() != n) fail("p", "only the sga flow supports p < n");
    build_skew(cfg, n);
    build_q0(cfg, a, 0);
  } else if (command == "predict" || command == "rates") {
    if (command == "predict" && !cfg["verify"].is_boolean()) fail("verify", "expected true or false");
    build_q0(cfg, a, 0);
  } else if (command == "online") {
    count(cfg, "steps");
    count(cfg, "stride", 1);
    wrap("mode", [&] { return parse_online_mode(text(cfg, "mode")); });
    const double burn = number(cfg, "burn_in");
    if (!(burn >= 0.0 && burn < 1.0)) fail("burn_in", "must lie in [0, 1)");
    positive(cfg, "angle_tolerance");
    if (!cfg["decoupling_check"].is_boolean()) fail("decoupling_check", "expected true or false");
    if (is_auto(cfg["schedule"]["c"])) cfg["schedule"]["c"] = 0.5 / a.eigenvalues().front();
    build_schedule(cfg);
    build_w0(cfg, n, cfg["p"].get<std::size_t>());
  } else if (command == "riccati") {
    build_p0(cfg, n);
  }
  return cfg;
}

SpectralMatrix build_spectrum(const Json& cfg) {
  const auto lambda = number_array(at(cfg, "eigenvalues"), "eigenvalues");
  return wrap("eigenvalues", [&] {
    SpectralMatrix d = SpectralMatrix::diagonal(lambda);
    if (text(cfg, "basis") == "diagonal") return d;
    Rng rng = seeded(count(cfg, "seed"), Stream::basis);
    const Matrix v = random_orthogonal(lambda.size(), rng);
    return SpectralMatrix::from_matrix(symmetric_part(v * d.matrix() * v.transpose()));
  });
}

WeightVector build_weights(const Json& cfg) {
  const auto mu = number_array(at(cfg, "weights"), "weights");
  return wrap("weights", [&] { return WeightVector(mu); });
}

IntegratorConfig build_integrator(const Json& cfg) {
  IntegratorConfig c;
  c.method = wrap("integrator.method", [&] { return parse_method(text(cfg, "integrator.method")); });
  c.dt = positive(cfg, "integrator.dt");
  c.projection_interval = count(cfg, "integrator.projection_interval", 1);
  c.t_max = number(cfg, "integrator.t_max");
  if (c.t_max < 0.0) fail("integrator.t_max", "must be >= 0");
  c.convergence_threshold = positive(cfg, "integrator.convergence_threshold");
  c.sample_stride = count(cfg, "integrator.sample_stride", 1);
  c.max_defect = positive(cfg, "integrator.max_defect");
  wrap("integrator", [&] { c.validate(); return 0; });
  return c;
}

LearningSchedule build_schedule(const Json& cfg) {
  LearningSchedule s;
  s.rule = wrap("schedule.rule", [&] { return parse_schedule_rule(text(cfg, "schedule.rule")); });
  s.c = number(cfg, "schedule.c");
  s.k0 = number(cfg, "schedule.k0");
  s.gamma = number(cfg, "schedule.gamma");
  s.floor = number(cfg, "schedule.floor");
  wrap("schedule", [&] { s.validate(); return 0; });
  return s;
}

SkewFieldSpec build_skew(const Json& cfg, std::size_t n) {
  const std::string kind = text(cfg, "skew.kind");
  const double scale = number(cfg, "skew.scale");
  if (kind == "zero") return SkewFieldSpec::zero(n);
  if (kind == "random-constant") {
    Rng rng = seeded(count(cfg, "seed"), Stream::skew);
    return SkewFieldSpec::constant(scale * random_skew(n, rng));
  }
  if (kind == "random-conjugated") {
    // S(Q) = Qᵀ S0 Q: smooth in Q and skew for every Q.
    Rng rng = seeded(count(cfg, "seed"), Stream::skew);
    const Matrix s0 = scale * random_skew(n, rng);
    return SkewFieldSpec([s0](const Matrix& q) { return skew_part(q.transpose() * s0 * q); });
  }
  fail("skew.kind", "expected zero | random-constant | random-conjugated");
}

Matrix paper_example_q1() {
  const double a = std::sqrt(2.0) / 2.0;
  const double b = std::sqrt(3.0) / 3.0;
  const double c = std::sqrt(6.0) / 6.0;
  return Matrix{{0, a, -b, c}, {0, a, b, -c}, {-a, 0, c, b}, {a, 0, c, b}};
}

Matrix build_q0(const Json& cfg, const SpectralMatrix& a, std::size_t run) {
  const std::size_t n = a.n();
  const std::size_t p = cfg.contains("p") ? at(cfg, "p").get<std::size_t>() : n;
  const Json& choice = at(cfg, "q0");
  Matrix q;
  if (choice.is_array()) {
    q = matrix_from_json(choice, "q0");
  } else if (!choice.is_string()) {
    fail("q0", "expected identity | random | paper-example-Q1 | array of rows");
  } else if (choice == "identity") {
    q = Matrix::identity(n).leading_columns(p);
  } else if (choice == "random") {
    Rng rng = seeded(count(cfg, "seed") + run, Stream::q0);
    q = random_orthogonal(n, rng).leading_columns(p);
  } else if (choice == "paper-example-Q1") {
    q = paper_example_q1();
  } else {
    fail("q0", "expected identity | random | paper-example-Q1 | array of rows");
  }
  if (q.rows() != n || q.cols() != p) {
    fail("q0", "must be " + std::to_string(n) + "x" + std::to_string(p));
  }
  wrap("q0", [&] { return StiefelPoint(q); });
  return q;
}

Matrix build_w0(const Json& cfg, std::size_t n, std::size_t p) {
  const Json& choice = at(cfg, "w0");
  Matrix w;
  if (choice.is_array()) {
    w = matrix_from_json(choice, "w0");
  } else if (choice == "identity") {
    w = Matrix::identity(n).leading_columns(p);
  } else if (choice == "random") {
    Rng rng = seeded(count(cfg, "seed"), Stream::w0);
    w = random_orthogonal(n, rng).leading_columns(p);
  } else {
    fail("w0", "expected identity | random | array of rows");
  }
  if (w.rows() != n || w.cols() != p) {
    fail("w0", "must be " + std::to_string(n) + "x" + std::to_string(p));
  }
  if (orthogonality_defect(w) > 1e-10) fail("w0", "columns must be orthonormal");
  return w;
}

Matrix build_p0(const Json& cfg, std::size_t n) {
  const Json& choice = at(cfg, "p0");
  if (choice == "identity") return Matrix::identity(n);
  if (choice == "random-rank-n") {
    // Q0 = U·diag(s)·Vᵀ with singular values in [0.5, 1.5]; P0 = Q0Q0ᵀ.
    Rng rng = seeded(count(cfg, "seed"), Stream::p0);
    const Matrix u = random_orthogonal(n, rng);
    const Matrix v = random_orthogonal(n, rng);
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    std::vector<double> s(n);
    for (double& x : s) x = unif(rng);
    const Matrix q = scale_cols(u, s) * v.transpose();
    return symmetric_part(q * q.transpose());
  }
  if (!choice.is_array()) fail("p0", "expected identity | random-rank-n | array of rows");
  Matrix p = matrix_from_json(choice, "p0");
  if (p.rows() != n || p.cols() != n) fail("p0", "must be " + std::to_string(n) + "x" + std::to_string(n));
  wrap("p0", [&] { require_symmetric(p, 1e-10); return 0; });
  const auto ed = sym_eigendecomposition(symmetric_part(p));
  const double top = std::max(std::abs(ed.values.front()), 1.0);
  if (ed.values.back() < -1e-12 * top) fail("p0", "must be positive semidefinite");
  return p;
}

std::vector<double> parse_number_list(const std::string& s, std::string_view field) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(field, "cannot parse '" + item + "' as a number");
    }
  }
  if (out.empty()) fail(field, "expected a comma-separated list of numbers");
  return out;
}

}  // namespace ojaflow::cli

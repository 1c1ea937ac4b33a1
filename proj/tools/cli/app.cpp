#include "cli/app.hpp"

#include <deque>
#include <exception>
#include <map>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"

namespace ojaflow::cli {

namespace {

enum class Kind { text, number, integer, list, matrix_or_name };

// A flag bound to a config path. Values are kept as text and converted here so
// malformed input is reported against the config field it targets.
struct Binding {
  std::string path;
  Kind kind;
  std::string value;
  CLI::Option* option = nullptr;
};

struct Command {
  std::string config_file;
  bool verify = false;
  bool quiet = false;
  std::deque<Binding> bindings;  // stable addresses for CLI11
};

void set_path(Json& j, const std::string& path, Json value) {
  const auto dot = path.find('.');
  if (dot == std::string::npos) {
    j[path] = std::move(value);
    return;
  }
  set_path(j[path.substr(0, dot)], path.substr(dot + 1), std::move(value));
}

Json convert(const Binding& b) {
  try {
    switch (b.kind) {
      case Kind::text: return b.value;
      case Kind::number: {
        std::size_t used = 0;
        const double d = std::stod(b.value, &used);
        if (used == b.value.size()) return d;
        break;
      }
      case Kind::integer: {
        if (b.value.empty() || b.value.front() == '-') break;
        std::size_t used = 0;
        const unsigned long long v = std::stoull(b.value, &used);
        if (used == b.value.size()) return static_cast<std::uint64_t>(v);
        break;
      }
      case Kind::list: return parse_number_list(b.value, b.path);
      case Kind::matrix_or_name:
        if (!b.value.empty() && b.value.front() == '[') return Json::parse(b.value);
        return b.value;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
  }
  throw ConfigError(b.path + ": cannot parse '" + b.value + "'");
}

const char* describe(const std::string& command) {
  if (command == "simulate") return "integrate a flow from one or more starts and report the limits";
  if (command == "predict") return "predict the limit of the SGA flow from Q0 without integrating";
  if (command == "rates") return "fit exponential convergence slopes against the linearized rates";
  if (command == "online") return "run the stochastic SGA or GSO iteration on a sampled stream";
  if (command == "riccati") return "integrate the Riccati equation and compare with its closed form";
  return "";
}

void add_flags(CLI::App& sub, Command& c, const std::string& command) {
  auto opt = [&](const std::string& flag, const std::string& path, Kind kind,
                 const std::string& help) {
    Binding& b = c.bindings.emplace_back(Binding{path, kind, {}, nullptr});
    b.option = sub.add_option(flag, b.value, help);
  };
  sub.add_option("--config", c.config_file, "JSON config file; flags override its values");
  sub.add_flag("--quiet", c.quiet, "do not echo the summary to stdout");
  opt("--seed", "seed", Kind::integer, "random seed");
  opt("--out", "out", Kind::text, "output directory");
  opt("--jobs", "jobs", Kind::integer, "worker threads for multi-run batches");
  opt("--n", "n", Kind::integer, "dimension");
  opt("--eigs", "eigenvalues", Kind::list, "eigenvalues, comma separated, descending");
  opt("--weights", "weights", Kind::list, "weights mu, comma separated, descending");
  opt("--basis", "basis", Kind::text, "diagonal | random (rotate A by a seeded orthogonal matrix)");

  if (command != "online") {
    opt("--dt", "integrator.dt", Kind::number, "step size");
    opt("--t-max", "integrator.t_max", Kind::number, "integration horizon");
    opt("--method", "integrator.method", Kind::text, "rk4 | rk4-projected | euler");
    opt("--threshold", "integrator.convergence_threshold", Kind::number,
        "stop once the field norm falls below this");
    opt("--stride", "integrator.sample_stride", Kind::integer, "sample every k steps");
  }
  if (command == "simulate" || command == "predict" || command == "rates") {
    opt("--q0", "q0", Kind::matrix_or_name, "identity | random | paper-example-Q1 | JSON rows");
  }
  if (command == "simulate" || command == "rates") {
    opt("--runs", "runs", Kind::integer, "number of runs; random starts use seed, seed+1, ...");
  }
  if (command == "simulate") {
    opt("--flow", "flow", Kind::text, "sga | brockett | llg-tildeg | llg-euclid");
    opt("--p", "p", Kind::integer, "number of columns (p < n for sga only)");
    opt("--skew", "skew.kind", Kind::text, "zero | random-constant | random-conjugated");
    opt("--skew-scale", "skew.scale", Kind::number, "scale of the random skew field");
  }
  if (command == "predict") sub.add_flag("--verify", c.verify, "also integrate and compare");
  if (command == "rates" || command == "riccati") {
    opt("--slack", "slack", Kind::number, "relative slack on the slope bound");
  }
  if (command == "online") {
    opt("--p", "p", Kind::integer, "number of estimated components");
    opt("--steps", "steps", Kind::integer, "iterations");
    opt("--mode", "mode", Kind::text, "sga | gso");
    opt("--stride", "stride", Kind::integer, "record diagnostics every k iterations");
    opt("--w0", "w0", Kind::matrix_or_name, "identity | random | JSON rows");
    opt("--schedule", "schedule.rule", Kind::text, "constant | inverse-k | inverse-k-power");
    opt("--eta-c", "schedule.c", Kind::number, "base learning rate c");
    opt("--k0", "schedule.k0", Kind::number, "schedule offset k0");
    opt("--gamma", "schedule.gamma", Kind::number, "exponent for inverse-k-power");
  }
  if (command == "riccati") {
    opt("--p0", "p0", Kind::matrix_or_name, "identity | random-rank-n | JSON rows");
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ojaflow: flows on the orthogonal group, their stable manifolds and online PCA",
               "ojaflow"};
  app.require_subcommand(1);
  std::map<std::string, Command> commands;
  for (const char* name : kCommands) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    add_flags(*sub, commands[name], name);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  Command& c = commands[name];
  CommandResult res;
  try {
    Json file = c.config_file.empty() ? Json::object() : load_config_file(c.config_file);
    Json flags = Json::object();
    for (const auto& b : c.bindings)
      if (b.option->count() > 0) set_path(flags, b.path, convert(b));
    if (c.verify) flags["verify"] = true;
    const Json cfg = resolve_config(name, file, flags);
    res = run_command(name, cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  if (!c.quiet) out << res.summary.dump(2) << '\n';
  if (res.summary.contains("error")) err << "error: " << res.summary["error"]["message"].get<std::string>() << '\n';
  return res.exit_code;
}

}  // namespace ojaflow::cli

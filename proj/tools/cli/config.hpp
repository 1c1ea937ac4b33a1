#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ojaflow/energy.hpp"
#include "ojaflow/flows.hpp"
#include "ojaflow/integrator.hpp"
#include "ojaflow/linalg.hpp"
#include "ojaflow/online.hpp"

namespace ojaflow::cli {

using Json = nlohmann::ordered_json;

/// Invalid or inconsistent configuration; maps to exit code 1. The message
/// starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kCommands[] = {"simulate", "predict", "rates", "online", "riccati"};
bool is_command(std::string_view name);

/// Every key a command understands, with its default. "auto" marks values
/// derived during resolution.
Json default_config(std::string_view command);

Json load_config_file(const std::filesystem::path& path);

/// defaults ← file ← flags (RFC 7396 merge patches; flags win), then every
/// "auto" is replaced by its derived value. Throws ConfigError.
Json resolve_config(std::string_view command, const Json& file, const Json& flags);

// Typed views over a resolved config.
SpectralMatrix build_spectrum(const Json& cfg);
WeightVector build_weights(const Json& cfg);
IntegratorConfig build_integrator(const Json& cfg);
LearningSchedule build_schedule(const Json& cfg);
SkewFieldSpec build_skew(const Json& cfg, std::size_t n);

/// Q0 for run `run` (0-based): identity | random | paper-example-Q1 | explicit
/// rows. Random starts draw from seed + run.
Matrix build_q0(const Json& cfg, const SpectralMatrix& a, std::size_t run);
/// n×p start for the online command; the random start is the leading p
/// columns of a seeded n×n orthogonal matrix.
Matrix build_w0(const Json& cfg, std::size_t n, std::size_t p);
Matrix build_p0(const Json& cfg, std::size_t n);

/// The 4×4 start of the worked stable-manifold example.
Matrix paper_example_q1();

/// "4,3,2,1" → [4,3,2,1]; throws ConfigError naming `field`.
std::vector<double> parse_number_list(const std::string& text, std::string_view field);

}  // namespace ojaflow::cli

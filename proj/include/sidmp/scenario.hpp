// Declarative scenarios: a JSON document with sections {systems, graph,
// heterogeneity, inhibition, integrator, pipeline, outputs} is parsed into
// library objects and its pipeline steps are executed in order. The schema
// is documented in README.md.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sidmp/contraction.hpp"
#include "sidmp/learning.hpp"
#include "sidmp/network.hpp"

namespace sidmp::scenario {

using Json = nlohmann::json;

/// Configuration error carrying the offending field path (dotted, with
/// [index] for arrays) or the line/column of a syntax error.
struct ConfigError : ValidationError {
  ConfigError(std::string field, const std::string& what, int line = 0, int column = 0);
  std::string field;
  int line = 0;
  int column = 0;
};

enum class Command { simulate, certify, learn, gait };
Command parse_command(std::string_view name);
std::string command_name(Command c);

struct RunOptions {
  std::filesystem::path out_dir = "out";
  std::filesystem::path base_dir = ".";  // relative paths inside the config resolve here
  std::optional<std::uint64_t> seed;     // overrides the config seed
  std::optional<int> samples;            // overrides region sample counts
  bool verbose = false;
  std::ostream* out = nullptr;  // PASS/FAIL table; nothing printed when null
  std::ostream* log = nullptr;  // warnings and progress
};

struct StepOutcome {
  std::string name;
  std::string op;
  std::string kind;
  std::optional<bool> pass;  // unset for steps without an expectation
  std::string detail;
};

struct RunReport {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
  std::vector<StepOutcome> steps;
  Json results = Json::object();  // step name -> numbers reported by the step
};

/// Parses JSON text; syntax errors become ConfigError with line and column.
Json parse_config(std::string_view text);
Json load_config(const std::filesystem::path& path);

/// Runs one CLI command against a parsed config. The whole config is
/// validated before anything is written.
RunReport run(Command command, const Json& config, const RunOptions& options);

/// Machine-readable error description for the CLI.
Json error_report(const std::exception& e, std::string_view command, std::string_view config_path);

Json certificate_to_json(const contraction::Certificate& cert);

// ---------------------------------------------------------------------------
// Builders, exposed for tests and tools.
// ---------------------------------------------------------------------------

dynamics::CanonicalSystem parse_canonical(const Json& j, const std::string& path);
dynamics::TransformationSystem parse_transform(const Json& j, const std::string& path);
dynamics::ForcingFunction parse_forcing(const Json& j, const std::string& path);
Json forcing_to_json(const dynamics::ForcingFunction& f);

/// Region from {"kind": "annulus"|"ball"|"box"|"points", ...}.
RegionSampler parse_region(const Json& j, const std::string& path, std::uint64_t seed,
                           std::optional<int> samples);

struct NetworkSpec {
  network::CouplingGraph graph;
  network::HeterogeneousParams hetero;
  std::optional<network::InhibitionRule> inhibition;
  std::vector<double> node_phases;
  std::vector<std::string> node_names;
};

NetworkSpec parse_network(const Json& config);
network::CoupledCanonical build_network(const Json& config);
network::NetworkHierarchy build_gait(const Json& config);

/// Canonical amble offsets ψ for leg names LH, LF, RH, RF.
double amble_phase(std::string_view leg);

}  // namespace sidmp::scenario

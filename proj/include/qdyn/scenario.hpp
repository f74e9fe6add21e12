#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qdyn/state.hpp"

namespace qdyn::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kOk = 0, kValidationFailure = 2, kResourceCapFailure = 3, kContractFailure = 4 };

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  int qubit_cap = kDefaultQubitCap;
  int threads = 0;                    // 0 leaves the runtime default
};

/// A file the run produces, written only after the whole run succeeds.
struct Artifact {
  std::string name;
  std::string content;
};

/// A config that passed validation. `config` is the canonical form (seed
/// filled in, defaults left implicit) that the hash digests.
struct Scenario {
  std::string kind;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::string hash;
  std::filesystem::path base_dir;  // resolves relative table paths
};

struct RunResult {
  nlohmann::json manifest;
  std::vector<Artifact> artifacts;  // manifest.json last
};

/// Reads a JSON config (ValidationError on syntax errors).
nlohmann::json load_config(const std::filesystem::path& path);

/// Checks every field against module preconditions before any compute.
/// Errors carry the field path, e.g. "grid.qubits_per_axis: ...".
Scenario validate_scenario(const nlohmann::json& config, const RunOptions& opt = {},
                           const std::filesystem::path& base_dir = {});

/// Runs a validated scenario in memory.
RunResult run_scenario(const Scenario& scenario, const RunOptions& opt = {});

/// Lower-case hex SHA-256 of the canonical (sorted-key, compact) dump.
std::string scenario_hash(const nlohmann::json& canonical);

/// Potentials, scenario kinds, parameter schemas and one example config per kind.
nlohmann::json list_builtins();

/// Closest candidate by edit distance ("" when there are none).
std::string nearest_match(const std::string& name, const std::vector<std::string>& candidates);

struct FigureOptions {
  std::vector<int> n_values{6, 8, 10, 12};
  std::vector<int> m_values{10, 20};
  std::vector<int> z_values{1, 10, 50, 100};
  int m = 20;  // crossover precision
  int K = 15;
  int step_ratio = 1000;
  std::int64_t steps = 1000;
  int max_particles = 20;
  int max_atoms = 10;
};
std::vector<Artifact> emit_figures(const FigureOptions& opt);

/// Writes artifacts into `out_dir` (created if missing). Names are plain
/// file names; anything with a directory component is rejected.
void write_artifacts(const std::filesystem::path& out_dir, const std::vector<Artifact>& artifacts);

/// Full `run` subcommand: validate, compute, write. Reports errors on `err`
/// and maps them to exit codes.
int run_command(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                const RunOptions& opt, std::ostream& out, std::ostream& err);
/// `validate` subcommand.
int validate_command(const std::filesystem::path& config_path, const RunOptions& opt, std::ostream& out,
                     std::ostream& err);

}  // namespace qdyn::cli

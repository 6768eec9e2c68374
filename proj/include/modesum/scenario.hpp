#pragma once

// JSON-configured scenario runner behind the command-line tool: schema
// validation, one task per run, manifest.json plus CSV tables.

#include "modesum/cosmology.hpp"
#include "modesum/errors.hpp"
#include "modesum/separability.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace modesum::scenario {

constexpr int kSchemaVersion = 1;

/// Schema violation; `path` is a JSON pointer to the offending field.
class ConfigError : public ArgumentError {
public:
    ConfigError(std::string path, const std::string& message)
        : ArgumentError(path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

enum class Task { SolveModes, Bounds, Instability, CheckSeparability, Propagator, Plancherel, Reconstruct };

std::string to_string(Task task);
Task task_from_string(const std::string& name);
std::vector<std::string> task_names();

struct ModelConfig {
    std::string law = "minkowski";  ///< minkowski, de_sitter, power_law, tabulated
    double H = 1.0;
    double p = 2.0 / 3.0;
    double t0 = 1.0;
    std::vector<double> table_t, table_a;
    double m0sq = 0.0;
    double xi = 0.0;
    int d = 3;
    double L = 2.0 * M_PI;
    Interval interval{0.0, 1.0};

    cosmo::CosmologicalModel build() const;
};

struct Tolerances {
    double ode = 1e-10;           ///< integrator tolerance
    double invariant = 1e-8;      ///< Wronskian and normalization
    double antisymmetry = 1e-9;
    double residual = 1e-6;       ///< ODE residual of E[f]
    double plancherel = 1e-9;
    double reconstruct = 1e-5;
    double separability = 1e-8;
};

struct ScenarioConfig {
    Task task = Task::SolveModes;
    std::optional<ModelConfig> model;  ///< absent only for check-separability
    cosmo::FieldKind field = cosmo::FieldKind::Scalar;
    std::vector<std::vector<int>> k_list;
    int cutoff = -1;                   ///< −1: default per dimension
    std::size_t points = 513;
    std::uint64_t seed = 1;
    Tolerances tol;

    // bounds
    cplx T0 = 1.0, dT0 = 0.0;
    bool loose = false;
    std::size_t bound_samples = 2048;
    // instability
    std::size_t instability_samples = 4001;
    double instability_tol = 1e-9;
    // check-separability
    std::string chart = "frw";
    std::string chart_csv;
    sep::ZooOptions zoo;
    // propagator
    std::size_t pairs = 3;
    std::vector<std::vector<int>> kernel_k;
    std::size_t kernel_stride = 8;
    // plancherel
    std::vector<double> plancherel_times{0.0};

    nlohmann::ordered_json source;  ///< the validated input document
};

/// Validates `doc` against the schema. `task` (from the subcommand)
/// overrides nothing: when the document names a task it must agree.
ScenarioConfig parse_config(const nlohmann::json& doc, std::optional<Task> task = {});
ScenarioConfig load_config(const std::filesystem::path& path, std::optional<Task> task = {});

struct RunOptions {
    std::filesystem::path out_dir = "out";
    bool strict = false;
    unsigned threads = 0;
};

enum ExitCode : int { Ok = 0, ConfigFailure = 2, NumericFailure = 3, InvariantViolation = 4 };

struct RunResult {
    int exit_code = Ok;
    nlohmann::ordered_json manifest;
    std::vector<std::string> artifacts;  ///< file names relative to out_dir
};

/// Runs the task and writes manifest.json and the task tables into
/// options.out_dir. Numeric failures are reported in the manifest and the
/// exit code, not thrown.
RunResult run(const ScenarioConfig& config, const RunOptions& options);

/// Writes an error manifest; used when the configuration cannot be read.
void write_error_manifest(const std::filesystem::path& out_dir, const std::string& kind,
                          const std::string& message, const std::string& path = {});

}  // namespace modesum::scenario

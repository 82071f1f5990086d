#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "natsel/dynamics.hpp"

namespace natsel::cli {

using json = nlohmann::json;

enum class TrajectoryFormat { Csv, Json };

struct CheckSpec {
    std::string type;
    json params;
};

struct Scenario {
    std::string name;
    VectorField field;
    State initial;
    std::optional<State> target{};
    double dt = 0.0;
    std::size_t steps = 0;
    std::vector<CheckSpec> checks{};
    bool write_trajectory = true;
    bool write_report = true;
};

/// Parses and validates a scenario. Throws Error(ConfigParseError) with a
/// message naming the offending field.
Scenario parse_scenario(const json& config);
Scenario load_scenario(const std::filesystem::path& path);

Landscape parse_landscape(const json& j, const std::string& field);
CoupledLandscape parse_coupled_landscape(const json& j, const std::string& field);
Matrix parse_matrix(const json& j, const std::string& field);

/// Parses "0.5,0.5" or "1/3,1/3,1/3".
Vector parse_vector_arg(const std::string& text);

struct RunOptions {
    TrajectoryFormat format = TrajectoryFormat::Csv;
    bool quiet = false;
};

struct RunResult {
    int exit_code = 0;
    json report;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCheckFailed = 2;

/// Integrates the scenario, runs every check and writes the requested outputs.
RunResult run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir,
                       const RunOptions& options);

/// File-level entry point; configuration and runtime errors become exit 1.
int run_scenario_file(const std::filesystem::path& config, const std::filesystem::path& out_dir,
                      const RunOptions& options, std::ostream& err);

/// Runs independent scenario files on up to `jobs` threads. Scenario names
/// must be distinct since they determine output paths.
int run_batch(const std::vector<std::filesystem::path>& configs, const std::filesystem::path& out_dir,
              const RunOptions& options, unsigned jobs, std::ostream& err);

/// Runs one check against a finished trajectory; returns {name, pass, metrics...}.
json run_check(const CheckSpec& check, const Scenario& scenario, const Trajectory& traj);

/// Standalone checks behind `natsel check <sub>`.
json check_ess(const Matrix& a, const SimplexPoint& point, double radius, std::size_t samples,
               std::uint64_t seed);
json check_localize(const SimplexPoint& point, double h, const std::string& divergence,
                    double tolerance);
json check_gradient(const SimplexPoint& point, std::span<const double> grad, std::size_t probes,
                    std::uint64_t seed, double tolerance);

void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
void write_trajectory_json(const Trajectory& traj, const std::string& scenario, std::ostream& out);

/// "%.17g"
std::string format_double(double v);

}  // namespace natsel::cli

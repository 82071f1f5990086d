#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "natsel/cli.hpp"
#include "natsel/geometry.hpp"

namespace {

using natsel::cli::json;

int emit(const json& report) {
    std::cout << report.dump(2) << '\n';
    return report.value("pass", false) ? natsel::cli::kExitOk : natsel::cli::kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Replicator and Lotka-Volterra dynamics with information-geometric checks"};
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Run scenario files and write trajectories and reports");
    std::vector<std::string> configs;
    std::string out_dir = ".";
    std::string format = "csv";
    bool quiet = false;
    unsigned jobs = 1;
    simulate->add_option("--config", configs, "Scenario JSON file (repeatable)")->required();
    simulate->add_option("--out", out_dir, "Output directory")->required();
    simulate->add_option("--format", format, "Trajectory format")->check(CLI::IsMember({"csv", "json"}));
    simulate->add_option("--jobs", jobs, "Scenario files to run concurrently")->check(CLI::PositiveNumber);
    simulate->add_flag("--quiet", quiet, "Suppress per-check summaries");

    // check
    auto* check = app.add_subcommand("check", "Run a single check without integration");
    check->require_subcommand(1);

    auto* ess = check->add_subcommand("ess", "Sample the ESS margin of a linear landscape");
    std::string matrix_text;
    std::string point_text;
    double radius = 0.1;
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    ess->add_option("--matrix", matrix_text, "Payoff matrix as nested JSON arrays")->required();
    ess->add_option("--point", point_text, "Candidate state, e.g. \"0.5,0.5\"")->required();
    ess->add_option("--radius", radius, "Tangent-ball radius");
    ess->add_option("--samples", samples, "Number of samples");
    ess->add_option("--seed", seed, "RNG seed");

    auto* localize = check->add_subcommand("localize", "Localize a divergence to a metric at a point");
    double h = natsel::kDefaultLocalizationStep;
    std::string divergence = "kl";
    double loc_tol = 1e-4;
    // "-h" stays free for --h.
    localize->set_help_flag("--help", "Print this help message and exit");
    localize->add_option("--point", point_text, "Base point")->required();
    localize->add_option("--h", h, "Finite-difference step");
    localize->add_option("--divergence", divergence, "kl or euclidean")
        ->check(CLI::IsMember({"kl", "euclidean"}));
    localize->add_option("--tolerance", loc_tol, "Max-norm tolerance against the closed form");

    auto* gradient = check->add_subcommand("gradient", "Check the metric-gradient identity at a point");
    std::string grad_text;
    std::size_t probes = 100;
    double grad_tol = 1e-10;
    gradient->add_option("--point", point_text, "Base point")->required();
    gradient->add_option("--grad", grad_text, "Euclidean gradient of the potential")->required();
    gradient->add_option("--probes", probes, "Random tangent probes");
    gradient->add_option("--seed", seed, "RNG seed");
    gradient->add_option("--tolerance", grad_tol, "Residual tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return natsel::cli::kExitError;
    }

    try {
        if (*simulate) {
            natsel::cli::RunOptions options;
            options.format = format == "json" ? natsel::cli::TrajectoryFormat::Json
                                              : natsel::cli::TrajectoryFormat::Csv;
            options.quiet = quiet;
            if (configs.size() == 1) {
                return natsel::cli::run_scenario_file(configs.front(), out_dir, options, std::cerr);
            }
            std::vector<std::filesystem::path> paths(configs.begin(), configs.end());
            return natsel::cli::run_batch(paths, out_dir, options, jobs, std::cerr);
        }
        if (*ess) {
            json m;
            try {
                m = json::parse(matrix_text);
            } catch (const json::parse_error& e) {
                throw natsel::Error(natsel::ErrorCode::ConfigParseError, std::string("--matrix: ") + e.what());
            }
            const natsel::Matrix a = natsel::cli::parse_matrix(m, "--matrix");
            const natsel::SimplexPoint x(natsel::cli::parse_vector_arg(point_text));
            return emit(natsel::cli::check_ess(a, x, radius, samples, seed));
        }
        if (*localize) {
            const natsel::SimplexPoint x(natsel::cli::parse_vector_arg(point_text));
            return emit(natsel::cli::check_localize(x, h, divergence, loc_tol));
        }
        if (*gradient) {
            const natsel::SimplexPoint x(natsel::cli::parse_vector_arg(point_text));
            const natsel::Vector g = natsel::cli::parse_vector_arg(grad_text);
            return emit(natsel::cli::check_gradient(x, g, probes, seed, grad_tol));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return natsel::cli::kExitError;
    }
    return natsel::cli::kExitError;
}

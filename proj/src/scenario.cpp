#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "natsel/cli.hpp"

namespace natsel::cli {

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& message) {
    throw Error(ErrorCode::ConfigParseError, field + ": " + message);
}

const json& require(const json& j, const std::string& key, const std::string& field) {
    if (!j.is_object() || !j.contains(key)) config_error(field + key, "missing required field");
    return j.at(key);
}

Vector parse_vector(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) config_error(field, "expected a non-empty array of numbers");
    Vector v;
    for (const auto& e : j) {
        if (!e.is_number()) config_error(field, "expected a non-empty array of numbers");
        v.push_back(e.get<double>());
    }
    return v;
}

template <class Point>
Point make_point(const json& j, const std::string& field) {
    Vector v = parse_vector(j, field);
    try {
        return Point(std::move(v));
    } catch (const Error& e) {
        config_error(field, e.what());
    }
}

State parse_state(const json& j, StateSpace space, const std::string& field) {
    switch (space) {
        case StateSpace::Simplex: return make_point<SimplexPoint>(j, field);
        case StateSpace::Orthant: return make_point<OrthantPoint>(j, field);
        case StateSpace::Coupled:
            if (!j.is_object()) config_error(field, "expected an object with \"p\" and \"q\"");
            return CoupledState{make_point<SimplexPoint>(require(j, "p", field + "."), field + ".p"),
                                make_point<SimplexPoint>(require(j, "q", field + "."), field + ".q")};
    }
    config_error(field, "unknown state space");
}

std::size_t state_dimension(const State& s) {
    if (const auto* c = std::get_if<CoupledState>(&s)) return c->pop1.size() + c->pop2.size();
    if (const auto* p = std::get_if<SimplexPoint>(&s)) return p->size();
    return std::get<OrthantPoint>(s).size();
}

void check_dimensions(const VectorField& field, const State& s, const std::string& where) {
    if (const auto* c = std::get_if<CoupledReplicator>(&field)) {
        const auto& cs = std::get<CoupledState>(s);
        if ((c->f.dimension() && c->f.dimension() != cs.pop1.size()) ||
            (c->g.dimension() && c->g.dimension() != cs.pop2.size())) {
            throw Error(ErrorCode::DimensionMismatch, where + ": population sizes do not match the landscape");
        }
        return;
    }
    const std::size_t dim = std::visit(
        [](const auto& k) -> std::size_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(k)>, Ecological>) {
                return k.g.dimension();
            } else if constexpr (std::is_same_v<std::decay_t<decltype(k)>, CoupledReplicator>) {
                return 0;
            } else {
                return k.f.dimension();
            }
        },
        field);
    if (dim != 0 && dim != state_dimension(s)) {
        throw Error(ErrorCode::DimensionMismatch,
                    where + ": state has dimension " + std::to_string(state_dimension(s)) +
                        " but the landscape expects " + std::to_string(dim));
    }
}

const std::set<std::string> kCheckTypes = {"ess",        "coupled_ess",    "denorm_ess",
                                           "lyapunov",   "fisher_theorem", "gradient_consistency",
                                           "localize",   "correspondence", "exp_family"};

std::mutex g_print_mutex;

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Matrix parse_matrix(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) config_error(field, "expected a nested array");
    std::vector<Vector> rows;
    for (std::size_t i = 0; i < j.size(); ++i) {
        rows.push_back(parse_vector(j[i], field + "[" + std::to_string(i) + "]"));
        if (rows.back().size() != rows.front().size()) config_error(field, "ragged matrix rows");
    }
    return Matrix::from_rows(rows);
}

Landscape parse_landscape(const json& j, const std::string& field) {
    const std::string type = require(j, "type", field + ".").get<std::string>();
    try {
        if (type == "linear") return Landscape::linear(parse_matrix(require(j, "matrix", field + "."), field + ".matrix"));
        if (type == "log_linear") {
            return Landscape::log_linear(parse_matrix(require(j, "matrix", field + "."), field + ".matrix"),
                                         parse_vector(require(j, "offset", field + "."), field + ".offset"));
        }
        if (type == "constant") return Landscape::constant(parse_vector(require(j, "values", field + "."), field + ".values"));
        if (type == "scaled") {
            const json& factor = require(j, "factor", field + ".");
            if (!factor.is_number()) config_error(field + ".factor", "expected a number");
            return Landscape::scaled(parse_landscape(require(j, "base", field + "."), field + ".base"),
                                     factor.get<double>());
        }
        if (type == "normalized") {
            return Landscape::normalized(parse_landscape(require(j, "base", field + "."), field + ".base"));
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigParseError) throw;
        config_error(field, e.what());
    }
    config_error(field + ".type", "unknown landscape type \"" + type + "\"");
}

CoupledLandscape parse_coupled_landscape(const json& j, const std::string& field) {
    if (!j.is_object()) config_error(field, "expected an object");
    Matrix own = j.contains("own") ? parse_matrix(j["own"], field + ".own") : Matrix{};
    Matrix cross = j.contains("cross") ? parse_matrix(j["cross"], field + ".cross") : Matrix{};
    Vector offset = j.contains("offset") ? parse_vector(j["offset"], field + ".offset") : Vector{};
    try {
        return CoupledLandscape::bilinear(std::move(own), std::move(cross), std::move(offset));
    } catch (const Error& e) {
        config_error(field, e.what());
    }
}

Vector parse_vector_arg(const std::string& text) {
    Vector out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto slash = item.find('/');
        try {
            std::size_t used = 0;
            if (slash == std::string::npos) {
                out.push_back(std::stod(item, &used));
                if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
            } else {
                const std::string num = item.substr(0, slash);
                const std::string den = item.substr(slash + 1);
                std::size_t used_den = 0;
                const double n = std::stod(num, &used);
                const double d = std::stod(den, &used_den);
                if (num.find_first_not_of(" \t", used) != std::string::npos ||
                    den.find_first_not_of(" \t", used_den) != std::string::npos || d == 0.0) {
                    throw std::invalid_argument(item);
                }
                out.push_back(n / d);
            }
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::ConfigParseError, "cannot parse \"" + item + "\" as a number");
        }
    }
    if (out.empty()) throw Error(ErrorCode::ConfigParseError, "empty vector");
    return out;
}

namespace {

VectorField parse_field(const json& config) {
    const json& kind_j = require(config, "kind", "");
    if (!kind_j.is_string()) config_error("kind", "expected a string");
    const std::string kind = kind_j.get<std::string>();
    const json& landscape = require(config, "landscape", "");
    if (kind == "replicator") return Replicator{parse_landscape(landscape, "landscape")};
    if (kind == "ecological") return Ecological{parse_landscape(landscape, "landscape")};
    if (kind == "lotka_volterra") return LotkaVolterra{parse_landscape(landscape, "landscape")};
    if (kind == "shifted_lotka_volterra") return ShiftedLotkaVolterra{parse_landscape(landscape, "landscape")};
    if (kind == "coupled_replicator") {
        return CoupledReplicator{parse_coupled_landscape(require(landscape, "f", "landscape."), "landscape.f"),
                                 parse_coupled_landscape(require(landscape, "g", "landscape."), "landscape.g")};
    }
    config_error("kind", "unknown kind \"" + kind + "\"");
}

}  // namespace

Scenario parse_scenario(const json& config) {
    if (!config.is_object()) config_error("<root>", "expected a JSON object");
    const json& name = require(config, "name", "");
    if (!name.is_string() || name.get<std::string>().empty()) config_error("name", "expected a non-empty string");
    if (name.get<std::string>().find_first_of("/\\") != std::string::npos) {
        config_error("name", "must not contain path separators");
    }

    VectorField field = parse_field(config);
    const StateSpace space = state_space(field);
    State initial = parse_state(require(config, "initial_state", ""), space, "initial_state");
    Scenario s{.name = name.get<std::string>(), .field = std::move(field), .initial = std::move(initial)};
    check_dimensions(s.field, s.initial, "initial_state");
    if (config.contains("target") && !config["target"].is_null()) {
        s.target = parse_state(config["target"], space, "target");
        check_dimensions(s.field, *s.target, "target");
        if (state_dimension(*s.target) != state_dimension(s.initial)) {
            throw Error(ErrorCode::DimensionMismatch, "target: dimension differs from initial_state");
        }
    }

    const json& dt = require(config, "dt", "");
    if (!dt.is_number() || !(dt.get<double>() > 0.0) || !std::isfinite(dt.get<double>())) {
        config_error("dt", "must be a positive number");
    }
    s.dt = dt.get<double>();
    const json& steps = require(config, "steps", "");
    if (!steps.is_number_integer() || steps.get<long long>() < 1) {
        config_error("steps", "must be an integer >= 1");
    }
    s.steps = steps.get<std::size_t>();

    if (config.contains("checks")) {
        const json& checks = config["checks"];
        if (!checks.is_array()) config_error("checks", "expected an array");
        for (std::size_t i = 0; i < checks.size(); ++i) {
            const std::string field = "checks[" + std::to_string(i) + "]";
            const json& type = require(checks[i], "type", field + ".");
            if (!type.is_string() || !kCheckTypes.count(type.get<std::string>())) {
                config_error(field + ".type", "unknown check type");
            }
            s.checks.push_back(CheckSpec{type.get<std::string>(), checks[i]});
        }
    }
    if (config.contains("outputs")) {
        const json& outputs = config["outputs"];
        if (!outputs.is_array()) config_error("outputs", "expected an array");
        s.write_trajectory = false;
        s.write_report = false;
        for (const auto& o : outputs) {
            const std::string v = o.is_string() ? o.get<std::string>() : "";
            if (v == "trajectory_csv") {
                s.write_trajectory = true;
            } else if (v == "report_json") {
                s.write_report = true;
            } else {
                config_error("outputs", "unknown output \"" + o.dump() + "\"");
            }
        }
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigParseError, path.string() + ": cannot open");
    json config;
    try {
        in >> config;
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigParseError, path.string() + ": " + e.what());
    }
    return parse_scenario(config);
}

// ---------------------------------------------------------------- outputs

namespace {

std::vector<std::string> trajectory_columns(const Trajectory& traj) {
    std::vector<std::string> cols{"t"};
    const std::size_t dim = traj.states.empty() ? traj.split : traj.states.front().size();
    for (std::size_t i = 0; i < traj.split; ++i) cols.push_back("x_" + std::to_string(i + 1));
    for (std::size_t j = traj.split; j < dim; ++j) cols.push_back("y_" + std::to_string(j - traj.split + 1));
    for (const char* c : {"mean_fitness", "fitness_variance", "divergence_to_target", "state_total"}) {
        cols.emplace_back(c);
    }
    return cols;
}

}  // namespace

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    const auto cols = trajectory_columns(traj);
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << '\n';
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out << format_double(traj.times[k]);
        for (double v : traj.states[k]) out << ',' << format_double(v);
        const StepDiagnostics& d = traj.diagnostics[k];
        out << ',' << format_double(d.mean_fitness) << ',' << format_double(d.fitness_variance) << ',';
        if (d.divergence) out << format_double(*d.divergence);
        out << ',' << format_double(d.state_total) << '\n';
    }
}

void write_trajectory_json(const Trajectory& traj, const std::string& scenario, std::ostream& out) {
    json doc;
    doc["scenario"] = scenario;
    doc["kind"] = std::string(kind_name(traj.field));
    doc["columns"] = trajectory_columns(traj);
    json rows = json::array();
    for (std::size_t k = 0; k < traj.size(); ++k) {
        json row = json::array();
        row.push_back(traj.times[k]);
        for (double v : traj.states[k]) row.push_back(v);
        const StepDiagnostics& d = traj.diagnostics[k];
        row.push_back(d.mean_fitness);
        row.push_back(d.fitness_variance);
        row.push_back(d.divergence ? json(*d.divergence) : json(nullptr));
        row.push_back(d.state_total);
        rows.push_back(std::move(row));
    }
    doc["rows"] = std::move(rows);
    out << doc.dump() << '\n';
}

// ---------------------------------------------------------------- running

RunResult run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir,
                       const RunOptions& options) {
    const Trajectory traj = integrate(scenario.field, scenario.initial, scenario.dt, scenario.steps,
                                      scenario.target);
    RunResult result;
    result.report["scenario"] = scenario.name;
    result.report["checks"] = json::array();
    bool all_pass = true;
    bool check_error = false;
    for (const CheckSpec& check : scenario.checks) {
        json entry;
        try {
            entry = run_check(check, scenario, traj);
        } catch (const Error& e) {
            entry = json{{"name", check.type}, {"pass", false}, {"error", e.what()}};
            check_error = true;
        }
        all_pass = all_pass && entry.value("pass", false);
        result.report["checks"].push_back(std::move(entry));
    }
    result.report["truncated"] = traj.truncated;
    if (traj.truncated) result.report["error"] = traj.failure;

    std::filesystem::create_directories(out_dir);
    if (scenario.write_trajectory) {
        if (options.format == TrajectoryFormat::Csv) {
            std::ofstream out(out_dir / (scenario.name + ".csv"));
            write_trajectory_csv(traj, out);
        } else {
            std::ofstream out(out_dir / (scenario.name + ".trajectory.json"));
            write_trajectory_json(traj, scenario.name, out);
        }
    }
    if (scenario.write_report) {
        std::ofstream out(out_dir / (scenario.name + ".report.json"));
        out << result.report.dump(2) << '\n';
    }

    if (traj.truncated || check_error) {
        result.exit_code = kExitError;
    } else {
        result.exit_code = all_pass ? kExitOk : kExitCheckFailed;
    }
    return result;
}

int run_scenario_file(const std::filesystem::path& config, const std::filesystem::path& out_dir,
                      const RunOptions& options, std::ostream& err) {
    try {
        const Scenario scenario = load_scenario(config);
        const RunResult result = run_scenario(scenario, out_dir, options);
        if (!options.quiet) {
            std::lock_guard lock(g_print_mutex);
            for (const auto& c : result.report["checks"]) {
                std::cout << scenario.name << ": " << c.value("name", "?") << " "
                          << (c.value("pass", false) ? "PASS" : "FAIL") << '\n';
            }
            if (result.report.value("truncated", false)) {
                std::cout << scenario.name << ": truncated (" << result.report.value("error", "") << ")\n";
            }
        }
        return result.exit_code;
    } catch (const Error& e) {
        std::lock_guard lock(g_print_mutex);
        err << config.string() << ": " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        std::lock_guard lock(g_print_mutex);
        err << config.string() << ": " << e.what() << '\n';
        return kExitError;
    }
}

int run_batch(const std::vector<std::filesystem::path>& configs, const std::filesystem::path& out_dir,
              const RunOptions& options, unsigned jobs, std::ostream& err) {
    // Output paths derive from scenario names, so names must be unique.
    std::set<std::string> names;
    for (const auto& path : configs) {
        try {
            const std::string name = load_scenario(path).name;
            if (!names.insert(name).second) {
                err << path.string() << ": ConfigParseError: name: output collision, scenario \"" << name
                    << "\" appears more than once\n";
                return kExitError;
            }
        } catch (const Error& e) {
            err << path.string() << ": " << e.what() << '\n';
            return kExitError;
        }
    }

    std::vector<int> codes(configs.size(), kExitOk);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            codes[i] = run_scenario_file(configs[i], out_dir, options, err);
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(configs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    if (std::count(codes.begin(), codes.end(), kExitError)) return kExitError;
    if (std::count(codes.begin(), codes.end(), kExitCheckFailed)) return kExitCheckFailed;
    return kExitOk;
}

}  // namespace natsel::cli

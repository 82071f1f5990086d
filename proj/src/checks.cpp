#include <algorithm>
#include <cmath>

#include "natsel/analysis.hpp"
#include "natsel/cli.hpp"
#include "natsel/divergence.hpp"
#include "natsel/geometry.hpp"

namespace natsel::cli {

namespace {

double param(const json& p, const char* key, double fallback) {
    if (!p.contains(key)) return fallback;
    if (!p[key].is_number()) throw Error(ErrorCode::ConfigParseError, std::string(key) + ": expected a number");
    return p[key].get<double>();
}

std::size_t count_param(const json& p, const char* key, std::size_t fallback) {
    if (!p.contains(key)) return fallback;
    if (!p[key].is_number_integer() || p[key].get<long long>() < 1) {
        throw Error(ErrorCode::ConfigParseError, std::string(key) + ": expected a positive integer");
    }
    return p[key].get<std::size_t>();
}

std::uint64_t seed_param(const json& p) {
    if (!p.contains("seed")) return 0;
    if (!p["seed"].is_number_integer()) throw Error(ErrorCode::ConfigParseError, "seed: expected an integer");
    return p["seed"].get<std::uint64_t>();
}

bool bool_param(const json& p, const char* key, bool fallback) {
    if (!p.contains(key)) return fallback;
    if (!p[key].is_boolean()) throw Error(ErrorCode::ConfigParseError, std::string(key) + ": expected a boolean");
    return p[key].get<bool>();
}

Vector json_vector(const json& j, const std::string& field) {
    if (!j.is_array()) throw Error(ErrorCode::ConfigParseError, field + ": expected an array");
    Vector v;
    for (const auto& e : j) {
        if (!e.is_number()) throw Error(ErrorCode::ConfigParseError, field + ": expected numbers");
        v.push_back(e.get<double>());
    }
    return v;
}

const Landscape& single_landscape(const VectorField& field) {
    if (const auto* r = std::get_if<Replicator>(&field)) return r->f;
    if (const auto* e = std::get_if<Ecological>(&field)) return e->g;
    if (const auto* lv = std::get_if<LotkaVolterra>(&field)) return lv->f;
    if (const auto* slv = std::get_if<ShiftedLotkaVolterra>(&field)) return slv->f;
    throw Error(ErrorCode::KindMismatch, "check needs a single-population kind");
}

json ess_metrics(const EssReport& r) {
    double max_abs = 0.0;
    for (double m : r.margins) max_abs = std::max(max_abs, std::abs(m));
    return json{{"is_ess", r.is_ess},
                {"min_margin", r.min_margin},
                {"max_margin", r.max_margin},
                {"max_abs_margin", max_abs},
                {"samples_tested", r.samples_tested},
                {"indeterminate", r.indeterminate},
                {"radius", r.radius}};
}

json finish_ess(json metrics, const EssReport& r, const json& p, const char* name) {
    const bool expect = bool_param(p, "expect", true);
    bool pass = r.is_ess == expect;
    if (p.contains("margin_bound")) {
        pass = pass && metrics["max_abs_margin"].get<double>() <= param(p, "margin_bound", 0.0);
    }
    metrics["name"] = name;
    metrics["expect"] = expect;
    metrics["pass"] = pass;
    return metrics;
}

SimplexPoint simplex_candidate(const json& p, const Scenario& s, const char* key) {
    if (p.contains(key)) return SimplexPoint(json_vector(p[key], key));
    if (s.target && std::holds_alternative<SimplexPoint>(*s.target)) return std::get<SimplexPoint>(*s.target);
    throw Error(ErrorCode::ConfigParseError, std::string(key) + ": required when the scenario has no simplex target");
}

OrthantPoint orthant_candidate(const json& p, const Scenario& s) {
    if (p.contains("candidate")) return OrthantPoint(json_vector(p["candidate"], "candidate"));
    if (s.target && std::holds_alternative<OrthantPoint>(*s.target)) return std::get<OrthantPoint>(*s.target);
    throw Error(ErrorCode::ConfigParseError, "candidate: required when the scenario has no orthant target");
}

CoupledState coupled_candidate(const json& p, const Scenario& s) {
    if (p.contains("candidate")) {
        const json& c = p["candidate"];
        if (!c.is_object() || !c.contains("p") || !c.contains("q")) {
            throw Error(ErrorCode::ConfigParseError, "candidate: expected an object with \"p\" and \"q\"");
        }
        return CoupledState{SimplexPoint(json_vector(c["p"], "candidate.p")),
                            SimplexPoint(json_vector(c["q"], "candidate.q"))};
    }
    if (s.target && std::holds_alternative<CoupledState>(*s.target)) return std::get<CoupledState>(*s.target);
    throw Error(ErrorCode::ConfigParseError, "candidate: required when the scenario has no coupled target");
}

SimplexPoint probe_point(const json& p, const Scenario& s) {
    if (p.contains("point")) return SimplexPoint(json_vector(p["point"], "point"));
    if (const auto* x = std::get_if<SimplexPoint>(&s.initial)) return *x;
    throw Error(ErrorCode::ConfigParseError, "point: required for non-simplex kinds");
}

json lyapunov_check(const json& p, const Scenario& s, const Trajectory& traj) {
    if (!s.target) throw Error(ErrorCode::ConfigParseError, "lyapunov: scenario needs a target");
    const LyapunovReport r = lyapunov_monitor(traj, *s.target);
    const std::string mode = p.value("mode", "descent");
    const double drift = std::abs(r.final_value - r.initial_value);
    json out{{"name", "lyapunov"},
             {"mode", mode},
             {"monotone", r.monotone},
             {"max_increase", r.max_increase},
             {"violations", r.violations},
             {"initial_value", r.initial_value},
             {"final_value", r.final_value},
             {"drift", drift},
             {"converged", r.converged}};

    bool parallel_early = false;
    if (traj.space == StateSpace::Orthant) {
        const auto parallel = first_parallel_step(traj, std::get<OrthantPoint>(*s.target));
        const auto conv = std::find_if(r.values.begin(), r.values.end(), [](double v) { return v <= kConvTol; });
        const std::optional<std::size_t> conv_step =
            conv == r.values.end() ? std::nullopt : std::optional<std::size_t>(conv - r.values.begin());
        parallel_early = parallel && (!conv_step || *parallel < *conv_step);
        out["first_parallel_step"] = parallel ? json(*parallel) : json(nullptr);
        out["convergence_step"] = conv_step ? json(*conv_step) : json(nullptr);
        out["parallel_before_convergence"] = parallel_early;
    }

    bool pass = false;
    if (mode == "descent") {
        pass = r.monotone && r.converged && !parallel_early;
    } else if (mode == "monotone") {
        pass = r.monotone && !parallel_early;
    } else if (mode == "conserved") {
        const double tol = param(p, "tolerance", 1e-6);
        out["tolerance"] = tol;
        pass = drift <= tol;
    } else if (mode == "non_monotone") {
        pass = !r.monotone;
    } else {
        throw Error(ErrorCode::ConfigParseError, "lyapunov.mode: unknown mode \"" + mode + "\"");
    }
    out["pass"] = pass;
    return out;
}

}  // namespace

json check_ess(const Matrix& a, const SimplexPoint& point, double radius, std::size_t samples,
               std::uint64_t seed) {
    const EssReport r = ess_check(point, Landscape::linear(a), radius, samples, seed);
    json out = ess_metrics(r);
    out["name"] = "ess";
    out["pass"] = r.is_ess;
    return out;
}

json check_localize(const SimplexPoint& point, double h, const std::string& divergence,
                    double tolerance) {
    DivergenceFn d;
    Vector expected(point.size());
    if (divergence == "kl") {
        d = kl_raw;
        for (std::size_t i = 0; i < point.size(); ++i) expected[i] = 1.0 / point[i];
    } else if (divergence == "euclidean") {
        d = [](std::span<const double> a, std::span<const double> b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) acc += 0.5 * (a[i] - b[i]) * (a[i] - b[i]);
            return acc;
        };
        std::fill(expected.begin(), expected.end(), 1.0);
    } else {
        throw Error(ErrorCode::ConfigParseError, "divergence: expected \"kl\" or \"euclidean\"");
    }
    const LocalizationReport r = localize_divergence(d, point, h);
    double max_error = 0.0;
    for (std::size_t i = 0; i < point.size(); ++i) {
        max_error = std::max(max_error, std::abs(r.metric[i] - expected[i]));
    }
    return json{{"name", "localize"},
                {"divergence", divergence},
                {"h", h},
                {"diag", Vector(r.metric.diag().begin(), r.metric.diag().end())},
                {"expected", expected},
                {"sign", r.sign},
                {"max_offdiag", r.max_offdiag},
                {"max_error", max_error},
                {"tolerance", tolerance},
                {"pass", max_error <= tolerance}};
}

json check_gradient(const SimplexPoint& point, std::span<const double> grad, std::size_t probes,
                    std::uint64_t seed, double tolerance) {
    const double residual = gradient_consistency_check(point, grad, probes, seed);
    return json{{"name", "gradient_consistency"},
                {"probes", probes},
                {"residual", residual},
                {"tolerance", tolerance},
                {"pass", residual <= tolerance}};
}

json run_check(const CheckSpec& check, const Scenario& s, const Trajectory& traj) {
    const json& p = check.params;
    const std::string& type = check.type;

    if (type == "ess") {
        const EssReport r = ess_check(simplex_candidate(p, s, "candidate"), single_landscape(s.field),
                                      param(p, "radius", 0.1), count_param(p, "samples", 1000), seed_param(p));
        return finish_ess(ess_metrics(r), r, p, "ess");
    }
    if (type == "coupled_ess") {
        const auto* c = std::get_if<CoupledReplicator>(&s.field);
        if (c == nullptr) throw Error(ErrorCode::KindMismatch, "coupled_ess needs a coupled kind");
        const CoupledState hat = coupled_candidate(p, s);
        const EssReport r = coupled_ess_check(hat.pop1, hat.pop2, c->f, c->g, param(p, "radius", 0.1),
                                              count_param(p, "samples", 1000), seed_param(p));
        return finish_ess(ess_metrics(r), r, p, "coupled_ess");
    }
    if (type == "denorm_ess") {
        const OrthantPoint hat = orthant_candidate(p, s);
        const EssReport r = denormalized_ess_check(hat, single_landscape(s.field), param(p, "radius", 0.1),
                                                   count_param(p, "samples", 1000), seed_param(p));
        json metrics = ess_metrics(r);
        metrics["parallel_samples"] = r.parallel_samples;
        return finish_ess(std::move(metrics), r, p, "denorm_ess");
    }
    if (type == "lyapunov") return lyapunov_check(p, s, traj);
    if (type == "fisher_theorem") {
        const double residual = fisher_theorem_check(traj);
        const double tol = param(p, "tolerance", 1e-5);
        return json{{"name", "fisher_theorem"}, {"residual", residual}, {"tolerance", tol}, {"pass", residual <= tol}};
    }
    if (type == "gradient_consistency") {
        const SimplexPoint x = probe_point(p, s);
        const Vector grad = p.contains("grad") ? json_vector(p["grad"], "grad") : single_landscape(s.field)(x.coords());
        return check_gradient(x, grad, count_param(p, "probes", 100), seed_param(p), param(p, "tolerance", 1e-10));
    }
    if (type == "localize") {
        return check_localize(probe_point(p, s), param(p, "h", kDefaultLocalizationStep), p.value("divergence", "kl"),
                              param(p, "tolerance", 1e-4));
    }
    if (type == "correspondence") {
        const double residual = correspondence_residual(normalize_lv_trajectory(traj));
        const double tol = param(p, "tolerance", 1e-5);
        return json{{"name", "correspondence"}, {"residual", residual}, {"tolerance", tol}, {"pass", residual <= tol}};
    }
    if (type == "exp_family") {
        const double tol = param(p, "tolerance", 1e-6);
        double distance = 0.0;
        json out{{"name", "exp_family"}};
        if (const auto* c = std::get_if<CoupledReplicator>(&s.field)) {
            const auto run = coupled_exp_family_solver(c->f, c->g, std::get<CoupledState>(s.initial), s.dt, s.steps);
            distance = sup_distance(run.trajectory, traj);
        } else if (const auto* r = std::get_if<Replicator>(&s.field)) {
            const auto run = exp_family_solver(r->f, std::get<SimplexPoint>(s.initial), s.dt, s.steps);
            distance = sup_distance(run.trajectory, traj);
            out["normalizer_residual"] = normalizer_residual(run);
        } else {
            throw Error(ErrorCode::KindMismatch, "exp_family needs a replicator or coupled kind");
        }
        out["sup_distance"] = distance;
        out["tolerance"] = tol;
        out["pass"] = distance <= tol;
        return out;
    }
    throw Error(ErrorCode::ConfigParseError, "unknown check type \"" + type + "\"");
}

}  // namespace natsel::cli

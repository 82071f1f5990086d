#include "natsel/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "natsel/divergence.hpp"

namespace natsel {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::span<const double> head(std::span<const double> s, std::size_t split) {
    return s.first(split);
}
std::span<const double> tail(std::span<const double> s, std::size_t split) {
    return s.subspan(split);
}

Vector flatten(const State& s) {
    return std::visit(Overloaded{
                          [](const SimplexPoint& p) { return p.vector(); },
                          [](const OrthantPoint& p) { return p.vector(); },
                          [](const CoupledState& c) {
                              Vector v = c.pop1.vector();
                              v.insert(v.end(), c.pop2.coords().begin(), c.pop2.coords().end());
                              return v;
                          },
                      },
                      s);
}

std::size_t split_of(const State& s) {
    if (const auto* c = std::get_if<CoupledState>(&s)) return c->pop1.size();
    return flatten(s).size();
}

StateSpace space_of(const State& s) {
    switch (s.index()) {
        case 0: return StateSpace::Simplex;
        case 1: return StateSpace::Orthant;
        default: return StateSpace::Coupled;
    }
}

void renormalize(std::span<double> x) {
    double total = 0.0;
    for (double v : x) total += v;
    for (double& v : x) v /= total;
}

bool all_positive(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(),
                       [](double v) { return std::isfinite(v) && v > kPosFloor; });
}

// Divergence of a raw state from its target, matched to the state space.
double divergence_to(StateSpace space, const State& target, std::span<const double> x,
                     std::size_t split) {
    switch (space) {
        case StateSpace::Simplex:
            return std::max(0.0, kl_raw(std::get<SimplexPoint>(target).coords(), x));
        case StateSpace::Orthant: {
            const auto& t = std::get<OrthantPoint>(target);
            Vector tn = t.vector();
            renormalize(tn);
            Vector xn(x.begin(), x.end());
            renormalize(xn);
            return std::max(0.0, kl_raw(tn, xn));
        }
        case StateSpace::Coupled: {
            const auto& t = std::get<CoupledState>(target);
            return std::max(0.0, kl_raw(t.pop1.coords(), head(x, split))) +
                   std::max(0.0, kl_raw(t.pop2.coords(), tail(x, split)));
        }
    }
    return 0.0;
}

StepDiagnostics diagnose(const VectorField& field, StateSpace space, std::span<const double> x,
                         std::size_t split, const std::optional<State>& target) {
    StepDiagnostics d;
    d.state_total = sum(x);
    std::visit(Overloaded{
                   [&](const CoupledReplicator& c) {
                       const auto p = head(x, split);
                       const auto q = tail(x, split);
                       const Vector fp = c.f(p, q);
                       const Vector gq = c.g(q, p);
                       d.mean_fitness = weighted_mean(p, fp) + weighted_mean(q, gq);
                       d.fitness_variance = weighted_variance(p, fp) + weighted_variance(q, gq);
                   },
                   [&](const auto& single) {
                       const Landscape& f = [&]() -> const Landscape& {
                           if constexpr (std::is_same_v<std::decay_t<decltype(single)>, Ecological>)
                               return single.g;
                           else
                               return single.f;
                       }();
                       const Vector fx = f(x);
                       // Orthant kinds report per-capita statistics over y = x / |x|.
                       Vector w(x.begin(), x.end());
                       if (space == StateSpace::Orthant) renormalize(w);
                       d.mean_fitness = weighted_mean(w, fx);
                       d.fitness_variance = weighted_variance(w, fx);
                   },
               },
               field);
    if (target) d.divergence = divergence_to(space, *target, x, split);
    return d;
}

void check_target(StateSpace space, const std::optional<State>& target, std::size_t dim,
                  std::size_t split) {
    if (!target) return;
    if (space_of(*target) != space) {
        throw Error(ErrorCode::KindMismatch, "target state does not match the field's state space");
    }
    if (flatten(*target).size() != dim || split_of(*target) != split) {
        throw Error(ErrorCode::DimensionMismatch, "target dimension does not match the state");
    }
}

void check_step(double dt, std::size_t steps) {
    if (!(dt > 0.0) || !std::isfinite(dt) || steps < 1) {
        throw Error(ErrorCode::StepSizeInvalid,
                    "dt = " + std::to_string(dt) + ", steps = " + std::to_string(steps));
    }
}

// One classical RK4 step of y' = rhs(y).
template <class Rhs>
Vector rk4_step(const Rhs& rhs, const Vector& y, double dt) {
    const std::size_t n = y.size();
    auto axpy = [n](const Vector& base, const Vector& k, double h) {
        Vector out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = base[i] + h * k[i];
        return out;
    };
    const Vector k1 = rhs(y);
    const Vector k2 = rhs(axpy(y, k1, 0.5 * dt));
    const Vector k3 = rhs(axpy(y, k2, 0.5 * dt));
    const Vector k4 = rhs(axpy(y, k3, dt));
    Vector out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

}  // namespace

StateSpace state_space(const VectorField& field) {
    return std::visit(Overloaded{
                          [](const Replicator&) { return StateSpace::Simplex; },
                          [](const Ecological&) { return StateSpace::Simplex; },
                          [](const LotkaVolterra&) { return StateSpace::Orthant; },
                          [](const ShiftedLotkaVolterra&) { return StateSpace::Orthant; },
                          [](const CoupledReplicator&) { return StateSpace::Coupled; },
                      },
                      field);
}

std::string_view kind_name(const VectorField& field) {
    return std::visit(Overloaded{
                          [](const Replicator&) { return "replicator"; },
                          [](const Ecological&) { return "ecological"; },
                          [](const LotkaVolterra&) { return "lotka_volterra"; },
                          [](const ShiftedLotkaVolterra&) { return "shifted_lotka_volterra"; },
                          [](const CoupledReplicator&) { return "coupled_replicator"; },
                      },
                      field);
}

State Trajectory::state(std::size_t k) const {
    const Vector& s = states.at(k);
    switch (space) {
        case StateSpace::Simplex: return SimplexPoint(s);
        case StateSpace::Orthant: return OrthantPoint(s);
        case StateSpace::Coupled:
            return CoupledState{SimplexPoint(Vector(s.begin(), s.begin() + split)),
                                SimplexPoint(Vector(s.begin() + split, s.end()))};
    }
    throw Error(ErrorCode::KindMismatch, "unknown state space");
}

// ---------------------------------------------------------------- fields

TangentVector replicator_field(const SimplexPoint& x, const Landscape& f) {
    return TangentVector(velocity(Replicator{f}, x.coords(), x.size()));
}

TangentVector ecological_field(const SimplexPoint& x, const Landscape& g) {
    return TangentVector(velocity(Ecological{g}, x.coords(), x.size()));
}

Vector lv_field(const OrthantPoint& x, const Landscape& f) {
    return velocity(LotkaVolterra{f}, x.coords(), x.size());
}

Vector shifted_lv_field(const OrthantPoint& x, const Landscape& f) {
    return velocity(ShiftedLotkaVolterra{f}, x.coords(), x.size());
}

std::pair<TangentVector, TangentVector> coupled_replicator_field(const CoupledState& s,
                                                                 const CoupledLandscape& f,
                                                                 const CoupledLandscape& g) {
    const Vector flat = flatten(s);
    const std::size_t split = s.pop1.size();
    const Vector v = velocity(CoupledReplicator{f, g}, flat, split);
    return {TangentVector(Vector(v.begin(), v.begin() + split)),
            TangentVector(Vector(v.begin() + split, v.end()))};
}

Vector velocity(const VectorField& field, std::span<const double> x, std::size_t split) {
    auto replicate = [](std::span<const double> w, const Vector& f) {
        const double mean = dot(w, f);
        Vector out(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] * (f[i] - mean);
        return out;
    };
    return std::visit(
        Overloaded{
            [&](const Replicator& r) { return replicate(x, r.f(x)); },
            [&](const Ecological& e) {
                const Vector g = e.g(x);
                const double aggregate = dot(x, g);
                if (std::abs(aggregate) > kTangentTol) {
                    throw Error(ErrorCode::NotSimplexPreserving,
                                "x . g(x) = " + std::to_string(aggregate));
                }
                Vector out(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * g[i];
                return out;
            },
            [&](const LotkaVolterra& lv) {
                const Vector f = lv.f(x);
                Vector out(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * f[i];
                return out;
            },
            [&](const ShiftedLotkaVolterra& lv) {
                const Vector f = lv.f(x);
                const double total = sum(x);
                Vector out(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / total * f[i];
                return out;
            },
            [&](const CoupledReplicator& c) {
                if (split == 0 || split >= x.size()) {
                    throw Error(ErrorCode::DimensionMismatch, "invalid population split");
                }
                const auto p = head(x, split);
                const auto q = tail(x, split);
                Vector out = replicate(p, c.f(p, q));
                const Vector vq = replicate(q, c.g(q, p));
                out.insert(out.end(), vq.begin(), vq.end());
                return out;
            },
        },
        field);
}

// ---------------------------------------------------------------- integration

Trajectory integrate(const VectorField& field, const State& x0, double dt, std::size_t steps,
                     const std::optional<State>& target) {
    check_step(dt, steps);
    const StateSpace space = state_space(field);
    if (space_of(x0) != space) {
        throw Error(ErrorCode::KindMismatch,
                    "initial state does not match the state space of " + std::string(kind_name(field)));
    }
    Vector x = flatten(x0);
    const std::size_t split = split_of(x0);
    check_target(space, target, x.size(), split);

    Trajectory traj{field, space, split, {}, {}, {}, false, {}};
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    traj.diagnostics.reserve(steps + 1);

    auto record = [&](double t, const Vector& s) {
        traj.times.push_back(t);
        traj.states.push_back(s);
        traj.diagnostics.push_back(diagnose(field, space, s, split, target));
    };
    auto rhs = [&](const Vector& s) { return velocity(field, s, split); };

    record(0.0, x);
    for (std::size_t k = 1; k <= steps; ++k) {
        Vector next = rk4_step(rhs, x, dt);
        if (space == StateSpace::Simplex) {
            renormalize(next);
        } else if (space == StateSpace::Coupled) {
            renormalize(std::span<double>(next).first(split));
            renormalize(std::span<double>(next).subspan(split));
        }
        if (!all_positive(next)) {
            traj.truncated = true;
            traj.failure = "PositivityLoss at step " + std::to_string(k) + " (t = " +
                           std::to_string(static_cast<double>(k) * dt) + ")";
            break;
        }
        x = std::move(next);
        record(static_cast<double>(k) * dt, x);
    }
    return traj;
}

// ---------------------------------------------------------------- Lotka-Volterra normalization

NormalizedTrajectory normalize_lv_trajectory(const Trajectory& traj) {
    if (traj.empty()) throw Error(ErrorCode::EmptyTrajectory, "nothing to normalize");
    const bool shifted = std::holds_alternative<ShiftedLotkaVolterra>(traj.field);
    if (!shifted && !std::holds_alternative<LotkaVolterra>(traj.field)) {
        throw Error(ErrorCode::KindMismatch, "normalization needs a Lotka-Volterra trajectory");
    }
    const Landscape& f = shifted ? std::get<ShiftedLotkaVolterra>(traj.field).f
                                 : std::get<LotkaVolterra>(traj.field).f;

    NormalizedTrajectory out{Trajectory{traj.field, StateSpace::Simplex, traj.split, traj.times,
                                        {}, {}, traj.truncated, traj.failure},
                             {}};
    out.trajectory.states.reserve(traj.size());
    out.altered_fitness.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Vector& x = traj.states[k];
        const double total = sum(x);
        Vector y = x;
        renormalize(y);
        Vector g = f(x);
        if (shifted) {
            for (double& v : g) v /= total;
        }
        StepDiagnostics d;
        d.mean_fitness = weighted_mean(y, g);
        d.fitness_variance = weighted_variance(y, g);
        d.state_total = sum(y);
        if (k < traj.diagnostics.size()) d.divergence = traj.diagnostics[k].divergence;
        out.trajectory.diagnostics.push_back(d);
        out.trajectory.states.push_back(std::move(y));
        out.altered_fitness.push_back(std::move(g));
    }
    return out;
}

double correspondence_residual(const NormalizedTrajectory& normalized) {
    const Trajectory& traj = normalized.trajectory;
    if (traj.size() < 3) throw Error(ErrorCode::EmptyTrajectory, "need at least 3 states");
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
        const Vector& y = traj.states[k];
        const Vector& g = normalized.altered_fitness[k];
        const double mean = dot(y, g);
        const double span_t = traj.times[k + 1] - traj.times[k - 1];
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double fd = (traj.states[k + 1][i] - traj.states[k - 1][i]) / span_t;
            worst = std::max(worst, std::abs(fd - y[i] * (g[i] - mean)));
        }
    }
    return worst;
}

// ---------------------------------------------------------------- exponential families

double log_sum_exp(std::span<const double> v) {
    const double vmax = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(vmax)) throw Error(ErrorCode::Overflow, "non-finite exponent");
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - vmax);
    return vmax + std::log(acc);
}

Vector softmax(std::span<const double> v) {
    const double g = log_sum_exp(v);
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - g);
        if (!(out[i] > 0.0)) throw Error(ErrorCode::Overflow, "probability underflowed to zero");
    }
    return out;
}

namespace {

Vector logs_of(std::span<const double> x) {
    Vector v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) v[i] = std::log(x[i]);
    return v;
}

}  // namespace

ExpFamilyRun exp_family_solver(const Landscape& f, const SimplexPoint& x0, double dt,
                               std::size_t steps, const std::optional<State>& target) {
    check_step(dt, steps);
    const VectorField field = Replicator{f};
    check_target(StateSpace::Simplex, target, x0.size(), x0.size());

    ExpFamilyRun run{Trajectory{field, StateSpace::Simplex, x0.size(), {}, {}, {}, false, {}}, {}};
    auto record = [&](double t, const Vector& v) {
        const double g = log_sum_exp(v);
        Vector x = softmax(v);
        run.trajectory.times.push_back(t);
        run.trajectory.diagnostics.push_back(diagnose(field, StateSpace::Simplex, x, x.size(), target));
        run.trajectory.states.push_back(std::move(x));
        run.params.push_back(ExpFamilyState{v, g});
    };
    auto rhs = [&](const Vector& v) { return f(softmax(v)); };

    Vector v = logs_of(x0.coords());
    record(0.0, v);
    for (std::size_t k = 1; k <= steps; ++k) {
        v = rk4_step(rhs, v, dt);
        record(static_cast<double>(k) * dt, v);
    }
    return run;
}

CoupledExpFamilyRun coupled_exp_family_solver(const CoupledLandscape& f, const CoupledLandscape& g,
                                              const CoupledState& s0, double dt, std::size_t steps,
                                              const std::optional<State>& target) {
    check_step(dt, steps);
    const VectorField field = CoupledReplicator{f, g};
    const std::size_t split = s0.pop1.size();
    check_target(StateSpace::Coupled, target, split + s0.pop2.size(), split);

    CoupledExpFamilyRun run{Trajectory{field, StateSpace::Coupled, split, {}, {}, {}, false, {}}, {}, {}};
    auto record = [&](double t, const Vector& vw) {
        const auto v = std::span<const double>(vw).first(split);
        const auto w = std::span<const double>(vw).subspan(split);
        Vector x = softmax(v);
        const Vector q = softmax(w);
        x.insert(x.end(), q.begin(), q.end());
        run.trajectory.times.push_back(t);
        run.trajectory.diagnostics.push_back(diagnose(field, StateSpace::Coupled, x, split, target));
        run.trajectory.states.push_back(std::move(x));
        run.pop1.push_back(ExpFamilyState{Vector(v.begin(), v.end()), log_sum_exp(v)});
        run.pop2.push_back(ExpFamilyState{Vector(w.begin(), w.end()), log_sum_exp(w)});
    };
    auto rhs = [&](const Vector& vw) {
        const Vector p = softmax(std::span<const double>(vw).first(split));
        const Vector q = softmax(std::span<const double>(vw).subspan(split));
        Vector out = f(p, q);
        const Vector gq = g(q, p);
        out.insert(out.end(), gq.begin(), gq.end());
        return out;
    };

    Vector vw = logs_of(s0.pop1.coords());
    const Vector w0 = logs_of(s0.pop2.coords());
    vw.insert(vw.end(), w0.begin(), w0.end());
    record(0.0, vw);
    for (std::size_t k = 1; k <= steps; ++k) {
        vw = rk4_step(rhs, vw, dt);
        record(static_cast<double>(k) * dt, vw);
    }
    return run;
}

double normalizer_residual(const ExpFamilyRun& run) {
    const auto& times = run.trajectory.times;
    if (times.size() < 3) throw Error(ErrorCode::EmptyTrajectory, "need at least 3 states");
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < times.size(); ++k) {
        const double fd = (run.params[k + 1].normalizer - run.params[k - 1].normalizer) /
                          (times[k + 1] - times[k - 1]);
        worst = std::max(worst, std::abs(fd - run.trajectory.diagnostics[k].mean_fitness));
    }
    return worst;
}

// ---------------------------------------------------------------- comparisons

double sup_distance(const Trajectory& a, const Trajectory& b) {
    const std::size_t n = std::min(a.size(), b.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (a.states[k].size() != b.states[k].size()) {
            throw Error(ErrorCode::DimensionMismatch, "trajectories differ in dimension");
        }
        for (std::size_t i = 0; i < a.states[k].size(); ++i) {
            worst = std::max(worst, std::abs(a.states[k][i] - b.states[k][i]));
        }
    }
    return worst;
}

namespace {

double point_segment_distance(const Vector& p, const Vector& a, const Vector& b) {
    double ab2 = 0.0;
    double apab = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        ab2 += (b[i] - a[i]) * (b[i] - a[i]);
        apab += (p[i] - a[i]) * (b[i] - a[i]);
    }
    const double t = ab2 > 0.0 ? std::clamp(apab / ab2, 0.0, 1.0) : 0.0;
    double d2 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double c = a[i] + t * (b[i] - a[i]) - p[i];
        d2 += c * c;
    }
    return std::sqrt(d2);
}

}  // namespace

double orbit_gap(const Trajectory& a, const Trajectory& b) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyTrajectory, "orbit gap of empty run");
    double worst = 0.0;
    for (const Vector& p : a.states) {
        double best = std::numeric_limits<double>::infinity();
        if (b.size() == 1) best = point_segment_distance(p, b.states[0], b.states[0]);
        for (std::size_t k = 0; k + 1 < b.size(); ++k) {
            best = std::min(best, point_segment_distance(p, b.states[k], b.states[k + 1]));
        }
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace natsel

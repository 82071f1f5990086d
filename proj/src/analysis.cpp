#include "natsel/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "natsel/divergence.hpp"
#include "natsel/geometry.hpp"

namespace natsel {

namespace {

// Uniform sample from a Euclidean ball of the given radius. With `tangent`
// set, the ball lies in the zero-sum hyperplane.
Vector ball_offset(std::mt19937_64& rng, std::size_t n, double radius, bool tangent) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector dir(n);
    double norm = 0.0;
    do {
        for (double& d : dir) d = gauss(rng);
        if (tangent) {
            const double mean = sum(dir) / static_cast<double>(n);
            for (double& d : dir) d -= mean;
        }
        norm = std::sqrt(dot(dir, dir));
    } while (norm == 0.0);
    const double dim = static_cast<double>(tangent ? n - 1 : n);
    const double r = radius * std::pow(unif(rng), 1.0 / dim);
    for (double& d : dir) d *= r / norm;
    return dir;
}

Vector perturb_simplex(std::mt19937_64& rng, std::span<const double> center, double radius) {
    Vector x = ball_offset(rng, center.size(), radius, true);
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] += center[i];
        if (!(x[i] > 0.0)) {
            throw Error(ErrorCode::RadiusTooLarge,
                        "radius " + std::to_string(radius) + " leaves the simplex interior");
        }
        total += x[i];
    }
    for (double& v : x) v /= total;
    return x;
}

void check_sampling(double radius, std::size_t samples) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw Error(ErrorCode::RadiusTooLarge, "radius must be positive and finite");
    }
    if (samples < 1) throw Error(ErrorCode::LengthMismatch, "need at least one sample");
}

// Largest coordinate displacement within a tangent ball is r sqrt((n - 1) / n).
void check_radius(std::span<const double> center, double radius, bool tangent) {
    const double n = static_cast<double>(center.size());
    const double reach = tangent ? radius * std::sqrt((n - 1.0) / n) : radius;
    const double lowest = *std::min_element(center.begin(), center.end());
    if (reach >= lowest) {
        throw Error(ErrorCode::RadiusTooLarge, "radius " + std::to_string(radius) +
                                                   " reaches the boundary from coordinate " +
                                                   std::to_string(lowest));
    }
}

void summarize(EssReport& report) {
    report.samples_tested = report.margins.size();
    report.min_margin = *std::min_element(report.margins.begin(), report.margins.end());
    report.max_margin = *std::max_element(report.margins.begin(), report.margins.end());
    std::size_t determinate = 0;
    bool all_positive = true;
    for (double m : report.margins) {
        if (std::abs(m) <= kIndeterminateBand) {
            ++report.indeterminate;
            continue;
        }
        ++determinate;
        all_positive = all_positive && m > kMarginTol;
    }
    report.is_ess = determinate > 0 && all_positive;
}

}  // namespace

EssReport ess_check(const SimplexPoint& candidate, const Landscape& f, double radius,
                    std::size_t samples, std::uint64_t seed) {
    check_sampling(radius, samples);
    check_radius(candidate.coords(), radius, true);
    std::mt19937_64 rng(seed);
    EssReport report;
    report.radius = radius;
    report.samples.reserve(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        report.samples.push_back(perturb_simplex(rng, candidate.coords(), radius));
    }
    for (const Vector& x : report.samples) {
        const Vector fx = f(x);
        report.margins.push_back(dot(candidate.coords(), fx) - dot(x, fx));
    }
    summarize(report);
    return report;
}

EssReport coupled_ess_check(const SimplexPoint& p_hat, const SimplexPoint& q_hat,
                            const CoupledLandscape& f, const CoupledLandscape& g, double radius,
                            std::size_t samples, std::uint64_t seed) {
    check_sampling(radius, samples);
    check_radius(p_hat.coords(), radius, true);
    check_radius(q_hat.coords(), radius, true);
    std::mt19937_64 rng(seed);
    EssReport report;
    report.radius = radius;
    const std::size_t split = p_hat.size();
    for (std::size_t s = 0; s < samples; ++s) {
        Vector pq = perturb_simplex(rng, p_hat.coords(), radius);
        const Vector q = perturb_simplex(rng, q_hat.coords(), radius);
        pq.insert(pq.end(), q.begin(), q.end());
        report.samples.push_back(std::move(pq));
    }
    for (const Vector& pq : report.samples) {
        const auto p = std::span<const double>(pq).first(split);
        const auto q = std::span<const double>(pq).subspan(split);
        const Vector fp = f(p, q);
        const Vector gq = g(q, p);
        report.margins.push_back(dot(p_hat.coords(), fp) + dot(q_hat.coords(), gq) - dot(p, fp) -
                                 dot(q, gq));
    }
    summarize(report);
    return report;
}

EssReport denormalized_ess_check(const OrthantPoint& candidate, const Landscape& f, double radius,
                                 std::size_t samples, std::uint64_t seed) {
    check_sampling(radius, samples);
    check_radius(candidate.coords(), radius, false);
    std::mt19937_64 rng(seed);
    EssReport report;
    report.radius = radius;
    for (std::size_t s = 0; s < samples; ++s) {
        Vector x = ball_offset(rng, candidate.size(), radius, false);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += candidate[i];
            if (!(x[i] > 0.0)) {
                throw Error(ErrorCode::RadiusTooLarge,
                            "radius " + std::to_string(radius) + " leaves the positive orthant");
            }
        }
        report.samples.push_back(std::move(x));
    }
    const double hat_total = candidate.total();
    for (const Vector& x : report.samples) {
        const Vector fx = f(x);
        report.margins.push_back(dot(candidate.coords(), fx) / hat_total - dot(x, fx) / sum(x));
        if (parallel_sine(x, candidate.coords()) <= kParallelTol) ++report.parallel_samples;
    }
    summarize(report);
    return report;
}

// ---------------------------------------------------------------- Lyapunov

LyapunovReport lyapunov_monitor(const Trajectory& traj, const State& target) {
    if (traj.empty()) throw Error(ErrorCode::EmptyTrajectory, "nothing to monitor");
    const bool matches = (traj.space == StateSpace::Simplex && std::holds_alternative<SimplexPoint>(target)) ||
                         (traj.space == StateSpace::Orthant && std::holds_alternative<OrthantPoint>(target)) ||
                         (traj.space == StateSpace::Coupled && std::holds_alternative<CoupledState>(target));
    if (!matches) throw Error(ErrorCode::KindMismatch, "target does not match the trajectory kind");

    LyapunovReport report;
    report.values.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const State s = traj.state(k);
        double value = 0.0;
        switch (traj.space) {
            case StateSpace::Simplex:
                value = kl(std::get<SimplexPoint>(target), std::get<SimplexPoint>(s));
                break;
            case StateSpace::Orthant:
                value = denormalized_kl(std::get<OrthantPoint>(target), std::get<OrthantPoint>(s));
                break;
            case StateSpace::Coupled: {
                const auto& t = std::get<CoupledState>(target);
                const auto& c = std::get<CoupledState>(s);
                const SimplexPoint targets[] = {t.pop1, t.pop2};
                const SimplexPoint states[] = {c.pop1, c.pop2};
                value = potential_information_sum(targets, states);
                break;
            }
        }
        report.values.push_back(value);
    }

    for (std::size_t k = 1; k < report.values.size(); ++k) {
        const double rise = report.values[k] - report.values[k - 1];
        report.max_increase = std::max(report.max_increase, rise);
        if (rise > kMonoSlack) ++report.violations;
    }
    report.monotone = report.max_increase <= kMonoSlack;
    report.initial_value = report.values.front();
    report.final_value = report.values.back();
    report.converged = report.final_value <= kConvTol;
    return report;
}

double parallel_sine(std::span<const double> a, std::span<const double> b) {
    const double nb = std::sqrt(dot(b, b));
    const double na = std::sqrt(dot(a, a));
    const double proj = dot(a, b) / nb;
    double perp2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double c = a[i] - proj * b[i] / nb;
        perp2 += c * c;
    }
    return std::sqrt(perp2) / na;
}

std::optional<std::size_t> first_parallel_step(const Trajectory& traj, const OrthantPoint& target) {
    if (traj.space != StateSpace::Orthant) {
        throw Error(ErrorCode::KindMismatch, "parallel monitor needs an orthant trajectory");
    }
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (parallel_sine(traj.states[k], target.coords()) <= kParallelTol) return k;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- Fisher / gradient

double shahshahani_potential(const SimplexPoint& x, const Matrix& a) {
    return 0.5 * dot(x.coords(), a.apply(x.coords()));
}

double potential_rate(const SimplexPoint& x, const Matrix& a) {
    if (!a.is_symmetric()) throw Error(ErrorCode::NotSymmetric, "potential needs a symmetric matrix");
    const Vector ax = a.apply(x.coords());
    const TangentVector xdot = shahshahani_gradient(x, ax);
    return dot(ax, xdot.components());
}

double fisher_theorem_check(const Trajectory& traj) {
    const auto* rep = std::get_if<Replicator>(&traj.field);
    if (rep == nullptr || traj.space != StateSpace::Simplex) {
        throw Error(ErrorCode::KindMismatch, "fisher theorem check needs a replicator trajectory");
    }
    const Matrix* a = rep->f.linear_matrix();
    if (a == nullptr) throw Error(ErrorCode::KindMismatch, "landscape is not linear");
    if (!a->is_symmetric()) throw Error(ErrorCode::NotSymmetric, "landscape matrix is not symmetric");
    if (traj.size() < 3) throw Error(ErrorCode::EmptyTrajectory, "need at least 3 states");

    // V(x+) - V(x-) = 1/2 (x+ + x-) . A (x+ - x-) for symmetric A, which avoids
    // differencing two nearly equal potentials.
    const std::size_t n = traj.split;
    Vector mid(n), diff(n);
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
        const Vector& xp = traj.states[k + 1];
        const Vector& xm = traj.states[k - 1];
        for (std::size_t i = 0; i < n; ++i) {
            mid[i] = 0.5 * (xp[i] + xm[i]);
            diff[i] = xp[i] - xm[i];
        }
        const double rate = dot(mid, a->apply(diff)) / (traj.times[k + 1] - traj.times[k - 1]);
        const Vector f = a->apply(traj.states[k]);
        worst = std::max(worst, std::abs(rate - weighted_variance(traj.states[k], f)));
    }
    return worst;
}

double gradient_consistency_check(const SimplexPoint& x, std::span<const double> potential_grad,
                                  std::size_t probes, std::uint64_t seed) {
    const TangentVector grad = shahshahani_gradient(x, potential_grad);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t p = 0; p < probes; ++p) {
        Vector w(x.size());
        for (double& c : w) c = gauss(rng);
        const double mean = sum(w) / static_cast<double>(w.size());
        for (double& c : w) c -= mean;
        const TangentVector probe(std::move(w));
        const double lhs = inner_product(x, grad, probe);
        const double rhs = dot(potential_grad, probe.components());
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace natsel

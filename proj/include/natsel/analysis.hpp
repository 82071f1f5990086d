#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "natsel/core.hpp"
#include "natsel/dynamics.hpp"

namespace natsel {

/// A margin must exceed this (strictly) to support stability.
inline constexpr double kMarginTol = 0.0;
/// Margins with |m| <= this are indeterminate and do not decide is_ess.
inline constexpr double kIndeterminateBand = 1e-12;
/// Per-step increase tolerated before a Lyapunov function counts as rising.
inline constexpr double kMonoSlack = 1e-9;
/// Final divergence (nats) at or below which a run counts as converged.
inline constexpr double kConvTol = 1e-6;
/// Sine of the angle below which two orthant points count as parallel.
inline constexpr double kParallelTol = 1e-9;

struct EssReport {
    bool is_ess = false;
    double min_margin = 0.0;
    double max_margin = 0.0;
    std::size_t samples_tested = 0;
    std::size_t indeterminate = 0;
    double radius = 0.0;
    /// Samples parallel to the candidate (denormalized check only).
    std::size_t parallel_samples = 0;
    /// Sampled states (flat (p, q) for the coupled check) and their margins.
    std::vector<Vector> samples;
    std::vector<double> margins;
};

/// Samples `samples` points uniformly from the tangent ball of `radius`
/// around the candidate and reports x_hat . f(x) - x . f(x) at each.
EssReport ess_check(const SimplexPoint& candidate, const Landscape& f, double radius,
                    std::size_t samples, std::uint64_t seed);

/// Margin p_hat . f + q_hat . g - p . f - q . g over the product of tangent balls.
EssReport coupled_ess_check(const SimplexPoint& p_hat, const SimplexPoint& q_hat,
                            const CoupledLandscape& f, const CoupledLandscape& g, double radius,
                            std::size_t samples, std::uint64_t seed);

/// Margin x_hat . f(x) / |x_hat| - x . f(x) / |x| over a Euclidean ball in the orthant.
EssReport denormalized_ess_check(const OrthantPoint& candidate, const Landscape& f, double radius,
                                 std::size_t samples, std::uint64_t seed);

struct LyapunovReport {
    bool monotone = false;
    double max_increase = 0.0;
    std::size_t violations = 0;
    double initial_value = 0.0;
    double final_value = 0.0;
    bool converged = false;
    std::vector<double> values;
};

/// Evaluates the divergence matched to the trajectory's state space (KL,
/// denormalized KL, or summed potential information) at every state.
LyapunovReport lyapunov_monitor(const Trajectory& traj, const State& target);

/// Sine of the angle between two orthant vectors.
double parallel_sine(std::span<const double> a, std::span<const double> b);

/// First step whose state is parallel to `target` within kParallelTol.
std::optional<std::size_t> first_parallel_step(const Trajectory& traj, const OrthantPoint& target);

/// V(x) = 1/2 x . A x
double shahshahani_potential(const SimplexPoint& x, const Matrix& a);

/// Exact dV/dt along the replicator flow: A x . x'.
double potential_rate(const SimplexPoint& x, const Matrix& a);

/// max |central difference of V - Var_x[A x]| over interior steps. Needs a
/// replicator trajectory with a symmetric linear landscape.
double fisher_theorem_check(const Trajectory& traj);

/// max |<grad_S V, w>_x - grad V . w| over random tangent probes w.
double gradient_consistency_check(const SimplexPoint& x, std::span<const double> potential_grad,
                                  std::size_t probes, std::uint64_t seed);

}  // namespace natsel

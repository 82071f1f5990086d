#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "natsel/core.hpp"

namespace natsel {

struct Replicator {
    Landscape f;
};
/// x_i' = x_i g_i(x), requiring x . g(x) = 0 on the simplex.
struct Ecological {
    Landscape g;
};
/// x_i' = x_i f_i(x) on the positive orthant.
struct LotkaVolterra {
    Landscape f;
};
/// x_i' = (x_i / |x|) f_i(x) on the positive orthant.
struct ShiftedLotkaVolterra {
    Landscape f;
};
/// Two populations; f is evaluated as f(p, q), g as g(q, p).
struct CoupledReplicator {
    CoupledLandscape f;
    CoupledLandscape g;
};

using VectorField =
    std::variant<Replicator, Ecological, LotkaVolterra, ShiftedLotkaVolterra, CoupledReplicator>;

enum class StateSpace { Simplex, Orthant, Coupled };

StateSpace state_space(const VectorField& field);
std::string_view kind_name(const VectorField& field);

using State = std::variant<SimplexPoint, OrthantPoint, CoupledState>;

/// Coordinates at or below this halt integration.
inline constexpr double kPosFloor = 1e-12;

struct StepDiagnostics {
    double mean_fitness = 0.0;
    double fitness_variance = 0.0;
    std::optional<double> divergence;
    double state_total = 0.0;
};

/// Time-stamped states of one run. Coupled states are stored flat as (p, q)
/// with `split` = dim p; for single-population runs `split` is the dimension.
struct Trajectory {
    VectorField field;
    StateSpace space = StateSpace::Simplex;
    std::size_t split = 0;
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<StepDiagnostics> diagnostics;
    bool truncated = false;
    std::string failure;

    std::size_t size() const noexcept { return states.size(); }
    bool empty() const noexcept { return states.empty(); }
    State state(std::size_t k) const;
    const Vector& back() const { return states.back(); }
};

TangentVector replicator_field(const SimplexPoint& x, const Landscape& f);
/// Throws NotSimplexPreserving when |x . g(x)| exceeds kTangentTol.
TangentVector ecological_field(const SimplexPoint& x, const Landscape& g);
Vector lv_field(const OrthantPoint& x, const Landscape& f);
Vector shifted_lv_field(const OrthantPoint& x, const Landscape& f);
std::pair<TangentVector, TangentVector> coupled_replicator_field(const CoupledState& s,
                                                                 const CoupledLandscape& f,
                                                                 const CoupledLandscape& g);

/// Velocity of `field` at a raw state. Used by the integrator, whose stage
/// points are not exactly normalized.
Vector velocity(const VectorField& field, std::span<const double> state, std::size_t split);

/// Classical fixed-step RK4. Simplex kinds are renormalized after each step.
/// Throws StepSizeInvalid or KindMismatch up front; a step that drives a
/// coordinate to kPosFloor or below stops the run with `truncated` set.
Trajectory integrate(const VectorField& field, const State& x0, double dt, std::size_t steps,
                     const std::optional<State>& target = std::nullopt);

/// Normalized image of a Lotka-Volterra run, together with the altered
/// landscape g(y) evaluated along it.
struct NormalizedTrajectory {
    Trajectory trajectory;
    /// g(y_k) = f(x_k) for Lotka-Volterra, f(x_k)/|x_k| for the shifted form.
    std::vector<Vector> altered_fitness;
};

NormalizedTrajectory normalize_lv_trajectory(const Trajectory& traj);

/// Max-norm gap between the central difference of y and y_i (g_i - y . g)
/// over interior steps.
double correspondence_residual(const NormalizedTrajectory& normalized);

struct ExpFamilyState {
    Vector v;
    double normalizer = 0.0;  // G = log sum_j exp(v_j)
};

struct ExpFamilyRun {
    Trajectory trajectory;
    std::vector<ExpFamilyState> params;
};

struct CoupledExpFamilyRun {
    Trajectory trajectory;
    std::vector<ExpFamilyState> pop1;
    std::vector<ExpFamilyState> pop2;
};

/// log sum exp, shifted by the maximum.
double log_sum_exp(std::span<const double> v);
/// exp(v_i - G)
Vector softmax(std::span<const double> v);

/// Integrates v' = f(x) with x = exp(v - G), recomputing G exactly each step.
ExpFamilyRun exp_family_solver(const Landscape& f, const SimplexPoint& x0, double dt,
                               std::size_t steps,
                               const std::optional<State>& target = std::nullopt);

CoupledExpFamilyRun coupled_exp_family_solver(const CoupledLandscape& f, const CoupledLandscape& g,
                                              const CoupledState& s0, double dt, std::size_t steps,
                                              const std::optional<State>& target = std::nullopt);

/// Max over interior steps of |central difference of G - recorded mean fitness|.
double normalizer_residual(const ExpFamilyRun& run);

/// Largest max-norm distance between states at equal indices.
double sup_distance(const Trajectory& a, const Trajectory& b);

/// One-sided Hausdorff gap: the largest Euclidean distance from a state of `a`
/// to the polyline through the states of `b`.
double orbit_gap(const Trajectory& a, const Trajectory& b);

}  // namespace natsel

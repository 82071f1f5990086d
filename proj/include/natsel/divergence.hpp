#pragma once

#include <span>
#include <vector>

#include "natsel/core.hpp"

namespace natsel {

/// Values at or below this (nats) count as minimized.
inline constexpr double kMinTol = 1e-12;

struct DivergenceReport {
    double value = 0.0;
    bool minimized = false;
};

DivergenceReport make_report(double value);

/// sum_i a_i (log a_i - log b_i) on raw positive vectors. No normalization is
/// applied, so the formula extends smoothly off the simplex.
double kl_raw(std::span<const double> a, std::span<const double> b);

/// D_KL(target || x), in nats.
double kl(const SimplexPoint& target, const SimplexPoint& x);

/// D_KL(target/|target| || x/|x|). Zero iff x is a positive multiple of target.
double denormalized_kl(const OrthantPoint& target, const OrthantPoint& x);

/// Sum of per-population potential information.
double potential_information_sum(std::span<const SimplexPoint> targets,
                                 std::span<const SimplexPoint> states);

}  // namespace natsel

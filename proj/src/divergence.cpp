#include "natsel/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace natsel {

DivergenceReport make_report(double value) {
    return DivergenceReport{value, value <= kMinTol};
}

double kl_raw(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch, "divergence arguments differ in dimension");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * (std::log(a[i]) - std::log(b[i]));
    return acc;
}

double kl(const SimplexPoint& target, const SimplexPoint& x) {
    // Jensen: the true value is >= 0, rounding can push an equal pair slightly below.
    return std::max(0.0, kl_raw(target.coords(), x.coords()));
}

double denormalized_kl(const OrthantPoint& target, const OrthantPoint& x) {
    if (target.size() != x.size()) {
        throw Error(ErrorCode::DimensionMismatch, "divergence arguments differ in dimension");
    }
    return kl(normalize(target), normalize(x));
}

double potential_information_sum(std::span<const SimplexPoint> targets,
                                 std::span<const SimplexPoint> states) {
    if (targets.size() != states.size() || targets.empty()) {
        throw Error(ErrorCode::LengthMismatch,
                    std::to_string(targets.size()) + " targets for " +
                        std::to_string(states.size()) + " states");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k) acc += kl(targets[k], states[k]);
    return acc;
}

}  // namespace natsel

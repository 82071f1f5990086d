#pragma once

#include <functional>
#include <span>

#include "natsel/core.hpp"

namespace natsel {

/// Diagonal metric tensor; every entry positive and finite.
class MetricTensor {
public:
    explicit MetricTensor(Vector diag);

    std::span<const double> diag() const noexcept { return diag_; }
    std::size_t size() const noexcept { return diag_.size(); }
    double operator[](std::size_t i) const { return diag_[i]; }

private:
    Vector diag_;
};

enum class OrthantMetricKind {
    ShahshahaniOrthant,  // |x| / x_i
    Akin,                // 1 / x_i
};

/// Shahshahani metric delta_ij / x_i.
MetricTensor metric_at(const SimplexPoint& x);

/// Fisher information of the categorical family, evaluated as the expectation
/// sum_k x_k (d log x_k / dx_i)(d log x_k / dx_j) rather than by formula.
MetricTensor fisher_metric_at(const SimplexPoint& x);

MetricTensor orthant_metric_at(const OrthantPoint& x, OrthantMetricKind kind);

/// <v, w>_x = sum_i v_i w_i / x_i
double inner_product(const SimplexPoint& x, const TangentVector& v, const TangentVector& w);

/// Metric gradient of a potential with Euclidean gradient `euclidean_grad`:
/// x_i (f_i - x . f).
TangentVector shahshahani_gradient(const SimplexPoint& x, std::span<const double> euclidean_grad);

/// exp(x, v)_i = x_i e^{v_i} / sum_j x_j e^{v_j}
SimplexPoint exp_map(const SimplexPoint& x, std::span<const double> v);

using DivergenceFn = std::function<double(std::span<const double>, std::span<const double>)>;

inline constexpr double kOffDiagTol = 1e-3;
inline constexpr double kDefaultLocalizationStep = 1e-3;

struct LocalizationReport {
    MetricTensor metric;
    /// +1 when the raw mixed partials are positive, -1 when negative.
    int sign = 1;
    double max_offdiag = 0.0;
    /// Full mixed-partial matrix as computed, before sign folding.
    Matrix raw;
};

/// Mixed-partial Hessian d^2 D / dx_i dy_j at x = y by central differences.
/// Perturbed arguments are not renormalized. Throws StepTooLarge when a
/// perturbation leaves the positive orthant, NotDiagonal when off-diagonal
/// entries exceed kOffDiagTol, NotDefinite when the diagonal changes sign.
LocalizationReport localize_divergence(const DivergenceFn& d, const SimplexPoint& x,
                                       double h = kDefaultLocalizationStep);

}  // namespace natsel

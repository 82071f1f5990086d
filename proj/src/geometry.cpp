#include "natsel/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace natsel {

MetricTensor::MetricTensor(Vector diag) : diag_(std::move(diag)) {
    for (double v : diag_) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::NotDefinite, "metric entry " + std::to_string(v));
        }
    }
}

MetricTensor metric_at(const SimplexPoint& x) {
    Vector d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = 1.0 / x[i];
    return MetricTensor(std::move(d));
}

MetricTensor fisher_metric_at(const SimplexPoint& x) {
    // Score of outcome k with respect to coordinate i: d log x_k / dx_i = delta_ik / x_i.
    // Accumulated in extended precision so the result rounds like 1 / x_i.
    const std::size_t n = x.size();
    auto score = [&](std::size_t k, std::size_t i) -> long double {
        return k == i ? 1.0L / x[i] : 0.0L;
    };
    Vector d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        long double expectation = 0.0L;
        for (std::size_t k = 0; k < n; ++k) expectation += x[k] * score(k, i) * score(k, i);
        d[i] = static_cast<double>(expectation);
    }
    return MetricTensor(std::move(d));
}

MetricTensor orthant_metric_at(const OrthantPoint& x, OrthantMetricKind kind) {
    const double scale = kind == OrthantMetricKind::ShahshahaniOrthant ? x.total() : 1.0;
    Vector d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = scale / x[i];
    return MetricTensor(std::move(d));
}

double inner_product(const SimplexPoint& x, const TangentVector& v, const TangentVector& w) {
    if (v.size() != x.size() || w.size() != x.size()) {
        throw Error(ErrorCode::DimensionMismatch, "tangent vectors must match the base point");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += v[i] * w[i] / x[i];
    return acc;
}

TangentVector shahshahani_gradient(const SimplexPoint& x, std::span<const double> euclidean_grad) {
    if (euclidean_grad.size() != x.size()) {
        throw Error(ErrorCode::DimensionMismatch, "gradient must match the base point");
    }
    const double mean = dot(x.coords(), euclidean_grad);
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * (euclidean_grad[i] - mean);
    return TangentVector(std::move(out));
}

SimplexPoint exp_map(const SimplexPoint& x, std::span<const double> v) {
    if (v.size() != x.size()) {
        throw Error(ErrorCode::DimensionMismatch, "velocity must match the base point");
    }
    // Shifting v by a constant leaves the quotient unchanged.
    const double vmax = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(vmax)) throw Error(ErrorCode::Overflow, "non-finite velocity");
    Vector out(x.size());
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] * std::exp(v[i] - vmax);
        total += out[i];
    }
    for (double& o : out) {
        o /= total;
        if (!(o > 0.0)) throw Error(ErrorCode::Overflow, "coordinate underflowed to zero");
    }
    return SimplexPoint(std::move(out));
}

LocalizationReport localize_divergence(const DivergenceFn& d, const SimplexPoint& x, double h) {
    const std::size_t n = x.size();
    if (!(h > 0.0)) throw Error(ErrorCode::StepTooLarge, "step must be positive");
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] - h <= 0.0) {
            throw Error(ErrorCode::StepTooLarge,
                        "x_" + std::to_string(i) + " - h leaves the positive orthant");
        }
    }

    const Vector base = x.vector();
    auto shifted = [&](std::size_t i, double delta) {
        Vector v = base;
        v[i] += delta;
        return v;
    };

    Matrix raw(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector xp = shifted(i, h);
        const Vector xm = shifted(i, -h);
        for (std::size_t j = 0; j < n; ++j) {
            const Vector yp = shifted(j, h);
            const Vector ym = shifted(j, -h);
            raw(i, j) = (d(xp, yp) - d(xp, ym) - d(xm, yp) + d(xm, ym)) / (4.0 * h * h);
        }
    }

    double max_off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) max_off = std::max(max_off, std::abs(raw(i, j)));
    if (max_off > kOffDiagTol) {
        throw Error(ErrorCode::NotDiagonal,
                    "largest off-diagonal mixed partial = " + std::to_string(max_off));
    }

    bool all_pos = true;
    bool all_neg = true;
    for (std::size_t i = 0; i < n; ++i) {
        all_pos = all_pos && raw(i, i) > 0.0;
        all_neg = all_neg && raw(i, i) < 0.0;
    }
    if (!all_pos && !all_neg) {
        throw Error(ErrorCode::NotDefinite, "diagonal of the mixed partials changes sign");
    }

    const int sign = all_pos ? 1 : -1;
    Vector diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = sign * raw(i, i);
    return LocalizationReport{MetricTensor(std::move(diag)), sign, max_off, std::move(raw)};
}

}  // namespace natsel

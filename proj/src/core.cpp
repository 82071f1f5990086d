#include "natsel/core.hpp"

#include <cmath>
#include <exception>
#include <string>

namespace natsel {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotInterior: return "NotInterior";
        case ErrorCode::NotNormalized: return "NotNormalized";
        case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::NotTangent: return "NotTangent";
        case ErrorCode::NonPositiveTau: return "NonPositiveTau";
        case ErrorCode::NonPositiveFactor: return "NonPositiveFactor";
        case ErrorCode::EvaluationFailure: return "EvaluationFailure";
        case ErrorCode::Overflow: return "Overflow";
        case ErrorCode::NotDiagonal: return "NotDiagonal";
        case ErrorCode::NotDefinite: return "NotDefinite";
        case ErrorCode::StepTooLarge: return "StepTooLarge";
        case ErrorCode::NotSimplexPreserving: return "NotSimplexPreserving";
        case ErrorCode::PositivityLoss: return "PositivityLoss";
        case ErrorCode::StepSizeInvalid: return "StepSizeInvalid";
        case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
        case ErrorCode::RadiusTooLarge: return "RadiusTooLarge";
        case ErrorCode::KindMismatch: return "KindMismatch";
        case ErrorCode::NotSymmetric: return "NotSymmetric";
        case ErrorCode::ConfigParseError: return "ConfigParseError";
    }
    return "Unknown";
}

// ---------------------------------------------------------------- Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<Vector> r;
    for (const auto& row : rows) r.emplace_back(row);
    *this = from_rows(r);
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols_) {
            throw Error(ErrorCode::DimensionMismatch, "ragged matrix rows");
        }
        for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector Matrix::apply(std::span<const double> x) const {
    if (x.size() != cols_) {
        throw Error(ErrorCode::DimensionMismatch,
                    "matrix has " + std::to_string(cols_) + " columns, vector has " +
                        std::to_string(x.size()) + " entries");
    }
    Vector out(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) acc += (*this)(i, j) * x[j];
        out[i] = acc;
    }
    return out;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::scaled(double c) const {
    Matrix m = *this;
    for (double& v : m.data_) v *= c;
    return m;
}

bool Matrix::is_symmetric(double tol) const {
    if (rows_ != cols_) return false;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i + 1; j < cols_; ++j)
            if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
    return true;
}

// ---------------------------------------------------------------- points

SimplexPoint::SimplexPoint(Vector coords) : coords_(std::move(coords)) {
    if (coords_.size() < 2) {
        throw Error(ErrorCode::DimensionTooSmall, "simplex points need at least 2 coordinates");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < coords_.size(); ++i) {
        if (!(coords_[i] > 0.0) || !std::isfinite(coords_[i])) {
            throw Error(ErrorCode::NotInterior,
                        "coordinate " + std::to_string(i) + " = " + std::to_string(coords_[i]));
        }
        s += coords_[i];
    }
    if (std::abs(s - 1.0) > kSimplexTol) {
        throw Error(ErrorCode::NotNormalized, "coordinate sum = " + std::to_string(s));
    }
}

OrthantPoint::OrthantPoint(Vector coords) : coords_(std::move(coords)) {
    if (coords_.empty()) {
        throw Error(ErrorCode::DimensionTooSmall, "orthant point is empty");
    }
    for (std::size_t i = 0; i < coords_.size(); ++i) {
        if (!(coords_[i] > 0.0) || !std::isfinite(coords_[i])) {
            throw Error(ErrorCode::NotInterior,
                        "coordinate " + std::to_string(i) + " = " + std::to_string(coords_[i]));
        }
        total_ += coords_[i];
    }
}

TangentVector::TangentVector(Vector components) : components_(std::move(components)) {
    const double s = sum(components_);
    if (std::abs(s) > kTangentTol) {
        throw Error(ErrorCode::NotTangent, "component sum = " + std::to_string(s));
    }
}

SimplexPoint validate_simplex(std::span<const double> v) {
    return SimplexPoint(Vector(v.begin(), v.end()));
}

SimplexPoint barycenter(std::size_t n) {
    if (n < 2) throw Error(ErrorCode::DimensionTooSmall, "barycenter needs n >= 2");
    return SimplexPoint(Vector(n, 1.0 / static_cast<double>(n)));
}

SimplexPoint normalize(const OrthantPoint& x) {
    Vector y(x.coords().begin(), x.coords().end());
    const double t = x.total();
    for (double& v : y) v /= t;
    return SimplexPoint(std::move(y));
}

OrthantPoint section(const SimplexPoint& x, double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw Error(ErrorCode::NonPositiveTau, "tau = " + std::to_string(tau));
    }
    Vector y(x.coords().begin(), x.coords().end());
    for (double& v : y) v *= tau;
    return OrthantPoint(std::move(y));
}

// ---------------------------------------------------------------- landscapes

Landscape Landscape::linear(Matrix a) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw Error(ErrorCode::DimensionMismatch, "linear landscape needs a square matrix");
    }
    return Landscape(Linear{std::move(a)});
}

Landscape Landscape::log_linear(Matrix a, Vector b) {
    if (a.rows() != a.cols() || a.rows() != b.size() || b.empty()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "log-linear landscape needs a square matrix matching the offset");
    }
    return Landscape(LogLinear{std::move(a), std::move(b)});
}

Landscape Landscape::constant(Vector c) {
    const std::size_t n = c.size();
    return log_linear(Matrix(n, n), std::move(c));
}

Landscape Landscape::scaled(Landscape base, double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor)) {
        throw Error(ErrorCode::NonPositiveFactor, "scale factor = " + std::to_string(factor));
    }
    return Landscape(Scaled{std::make_shared<const Landscape>(std::move(base)), factor});
}

Landscape Landscape::normalized(Landscape base) {
    return Landscape(Normalized{std::make_shared<const Landscape>(std::move(base))});
}

Landscape Landscape::custom(Evaluator fn, std::size_t dimension) {
    return Landscape(Custom{std::move(fn), dimension});
}

std::size_t Landscape::dimension() const {
    return std::visit(
        [](const auto& r) -> std::size_t {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Linear> || std::is_same_v<T, LogLinear>) {
                return r.a.rows();
            } else if constexpr (std::is_same_v<T, Custom>) {
                return r.dimension;
            } else {
                return r.base->dimension();
            }
        },
        rep_);
}

const Matrix* Landscape::linear_matrix() const {
    if (const auto* lin = std::get_if<Linear>(&rep_)) return &lin->a;
    return nullptr;
}

Vector Landscape::operator()(std::span<const double> x) const {
    const std::size_t dim = dimension();
    if (dim != 0 && dim != x.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "landscape expects dimension " + std::to_string(dim) + ", got " +
                        std::to_string(x.size()));
    }
    Vector f = std::visit(
        [&](const auto& r) -> Vector {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Linear>) {
                return r.a.apply(x);
            } else if constexpr (std::is_same_v<T, LogLinear>) {
                Vector logs(x.size());
                for (std::size_t j = 0; j < x.size(); ++j) logs[j] = std::log(x[j]);
                Vector out = r.a.apply(logs);
                for (std::size_t i = 0; i < out.size(); ++i) out[i] += r.b[i];
                return out;
            } else if constexpr (std::is_same_v<T, Scaled>) {
                Vector out = (*r.base)(x);
                const double mean = dot(x, out);
                for (double& v : out) v = r.factor * (v - mean);
                return out;
            } else if constexpr (std::is_same_v<T, Normalized>) {
                const double total = sum(x);
                Vector y(x.begin(), x.end());
                for (double& v : y) v /= total;
                return (*r.base)(y);
            } else {
                try {
                    return r.fn(x);
                } catch (const Error&) {
                    throw;
                } catch (const std::exception& e) {
                    throw Error(ErrorCode::EvaluationFailure, e.what());
                }
            }
        },
        rep_);
    if (f.size() != x.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "landscape returned " + std::to_string(f.size()) + " values for a state of size " +
                        std::to_string(x.size()));
    }
    return f;
}

CoupledLandscape CoupledLandscape::bilinear(Matrix own, Matrix cross, Vector offset) {
    std::size_t dim = own.rows() ? own.rows() : (cross.rows() ? cross.rows() : offset.size());
    if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "empty coupled landscape");
    if ((own.rows() && (own.rows() != dim || own.cols() != dim)) ||
        (cross.rows() && cross.rows() != dim) || (!offset.empty() && offset.size() != dim)) {
        throw Error(ErrorCode::DimensionMismatch, "coupled landscape blocks disagree on dimension");
    }
    auto fn = [own = std::move(own), cross = std::move(cross), offset = std::move(offset),
               dim](std::span<const double> self, std::span<const double> other) {
        Vector out(dim, 0.0);
        if (own.rows()) out = own.apply(self);
        if (cross.rows()) {
            const Vector c = cross.apply(other);
            for (std::size_t i = 0; i < dim; ++i) out[i] += c[i];
        }
        for (std::size_t i = 0; i < offset.size(); ++i) out[i] += offset[i];
        return out;
    };
    return CoupledLandscape(std::move(fn), dim);
}

CoupledLandscape CoupledLandscape::constant(Vector c) {
    return bilinear({}, {}, std::move(c));
}

CoupledLandscape CoupledLandscape::custom(Evaluator fn, std::size_t dimension) {
    return CoupledLandscape(std::move(fn), dimension);
}

Vector CoupledLandscape::operator()(std::span<const double> own,
                                    std::span<const double> other) const {
    if (dimension_ != 0 && dimension_ != own.size()) {
        throw Error(ErrorCode::DimensionMismatch, "coupled landscape dimension mismatch");
    }
    Vector f;
    try {
        f = fn_(own, other);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::EvaluationFailure, e.what());
    }
    if (f.size() != own.size()) {
        throw Error(ErrorCode::DimensionMismatch, "coupled landscape returned wrong size");
    }
    return f;
}

// ---------------------------------------------------------------- statistics

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "dot product sizes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double sum(std::span<const double> a) {
    double acc = 0.0;
    for (double v : a) acc += v;
    return acc;
}

double weighted_mean(std::span<const double> weights, std::span<const double> values) {
    return dot(weights, values);
}

double weighted_variance(std::span<const double> weights, std::span<const double> values) {
    const double mean = weighted_mean(weights, values);
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double d = values[i] - mean;
        acc += weights[i] * d * d;
    }
    return acc;
}

double mean_fitness(const SimplexPoint& x, const Landscape& f) {
    return weighted_mean(x.coords(), f(x.coords()));
}

double fitness_variance(const SimplexPoint& x, const Landscape& f) {
    return weighted_variance(x.coords(), f(x.coords()));
}

}  // namespace natsel

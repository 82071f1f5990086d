#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "natsel/error.hpp"

namespace natsel {

using Vector = std::vector<double>;

/// Absolute tolerance on the coordinate sum of a simplex point.
inline constexpr double kSimplexTol = 1e-9;
/// Absolute tolerance on the component sum of a tangent vector.
inline constexpr double kTangentTol = 1e-9;

/// Dense row-major matrix. Only what the landscapes need.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix from_rows(const std::vector<Vector>& rows);
    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    Vector apply(std::span<const double> x) const;
    Matrix transposed() const;
    Matrix scaled(double c) const;
    bool is_symmetric(double tol = 0.0) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

/// Strictly positive probability vector in the interior of the simplex.
class SimplexPoint {
public:
    /// Validates without renormalizing. Throws NotInterior, NotNormalized or
    /// DimensionTooSmall.
    explicit SimplexPoint(Vector coords);

    std::span<const double> coords() const noexcept { return coords_; }
    const Vector& vector() const noexcept { return coords_; }
    std::size_t size() const noexcept { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }

    friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

private:
    Vector coords_;
};

/// Strictly positive, non-normalized vector in the positive orthant.
class OrthantPoint {
public:
    explicit OrthantPoint(Vector coords);

    std::span<const double> coords() const noexcept { return coords_; }
    const Vector& vector() const noexcept { return coords_; }
    std::size_t size() const noexcept { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }
    /// |x|, the total mass.
    double total() const noexcept { return total_; }

private:
    Vector coords_;
    double total_ = 0.0;
};

/// Vector whose components sum to zero (within kTangentTol).
class TangentVector {
public:
    explicit TangentVector(Vector components);

    std::span<const double> components() const noexcept { return components_; }
    const Vector& vector() const noexcept { return components_; }
    std::size_t size() const noexcept { return components_.size(); }
    double operator[](std::size_t i) const { return components_[i]; }

private:
    Vector components_;
};

struct CoupledState {
    SimplexPoint pop1;
    SimplexPoint pop2;
};

SimplexPoint validate_simplex(std::span<const double> v);
SimplexPoint barycenter(std::size_t n);

/// N(x) = x / |x|.
SimplexPoint normalize(const OrthantPoint& x);
/// phi_tau(x) = tau * x. Throws NonPositiveTau.
OrthantPoint section(const SimplexPoint& x, double tau);

/// Fitness landscape over a single population state.
///
/// Landscapes are evaluated on raw coordinate spans so that the same object
/// serves simplex and orthant dynamics. Sub-landscapes are shared immutably.
class Landscape {
public:
    using Evaluator = std::function<Vector(std::span<const double>)>;

    /// f(x) = A x
    static Landscape linear(Matrix a);
    /// f_i(x) = sum_j A_ij log x_j + b_i
    static Landscape log_linear(Matrix a, Vector b);
    /// f(x) = c, expressed as a log-linear landscape with zero matrix.
    static Landscape constant(Vector c);
    /// g(x) = c (f(x) - (x . f(x)) 1), an aggregate-monotone ecological payoff.
    static Landscape scaled(Landscape base, double factor);
    /// f(x) = base(x / |x|); lifts a simplex landscape onto the orthant.
    static Landscape normalized(Landscape base);
    /// Opaque evaluator. `dimension` may be 0 when unknown.
    static Landscape custom(Evaluator fn, std::size_t dimension = 0);

    Vector operator()(std::span<const double> x) const;

    /// State dimension the landscape expects, 0 if unconstrained.
    std::size_t dimension() const;
    /// The matrix of a Linear landscape, nullptr otherwise.
    const Matrix* linear_matrix() const;

private:
    struct Linear {
        Matrix a;
    };
    struct LogLinear {
        Matrix a;
        Vector b;
    };
    struct Scaled {
        std::shared_ptr<const Landscape> base;
        double factor;
    };
    struct Normalized {
        std::shared_ptr<const Landscape> base;
    };
    struct Custom {
        Evaluator fn;
        std::size_t dimension;
    };

    using Rep = std::variant<Linear, LogLinear, Scaled, Normalized, Custom>;
    explicit Landscape(Rep rep) : rep_(std::move(rep)) {}

    Rep rep_;
};

/// Landscape of one population in a two-population system, evaluated as
/// f(own, other) = own_matrix * own + cross_matrix * other + offset.
/// The first population's landscape is called as f(p, q), the second as g(q, p).
class CoupledLandscape {
public:
    using Evaluator = std::function<Vector(std::span<const double>, std::span<const double>)>;

    /// Either matrix may be empty (0x0), meaning no contribution.
    static CoupledLandscape bilinear(Matrix own, Matrix cross, Vector offset = {});
    static CoupledLandscape constant(Vector c);
    static CoupledLandscape custom(Evaluator fn, std::size_t dimension = 0);

    Vector operator()(std::span<const double> own, std::span<const double> other) const;
    std::size_t dimension() const noexcept { return dimension_; }

private:
    CoupledLandscape(Evaluator fn, std::size_t dimension)
        : fn_(std::move(fn)), dimension_(dimension) {}

    Evaluator fn_;
    std::size_t dimension_ = 0;
};

double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);

/// f-bar(x) = x . f(x)
double mean_fitness(const SimplexPoint& x, const Landscape& f);
/// sum_i x_i (f_i(x) - f-bar(x))^2
double fitness_variance(const SimplexPoint& x, const Landscape& f);

/// Weighted mean and variance of precomputed fitness values.
double weighted_mean(std::span<const double> weights, std::span<const double> values);
double weighted_variance(std::span<const double> weights, std::span<const double> values);

}  // namespace natsel

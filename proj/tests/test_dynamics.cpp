#include <doctest.h>

#include <cmath>
#include <random>

#include "natsel/divergence.hpp"
#include "natsel/dynamics.hpp"
#include "oracles.hpp"

using namespace natsel;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected natsel::Error");
    return ErrorCode::ConfigParseError;
}

}  // namespace

TEST_CASE("replicator_field examples") {
    const TangentVector v = replicator_field(SimplexPoint({0.5, 0.25, 0.25}), Landscape::linear(oracle::rps()));
    CHECK(v[0] == doctest::Approx(0.0));
    CHECK(v[1] == doctest::Approx(0.0625));
    CHECK(v[2] == doctest::Approx(-0.0625));

    const TangentVector rest = replicator_field(barycenter(3), Landscape::linear(oracle::rps()));
    for (double c : rest.components()) CHECK(c == doctest::Approx(0.0));

    const TangentVector hd = replicator_field(SimplexPoint({0.5, 0.5}), Landscape::linear(oracle::hawk_dove()));
    CHECK(hd[0] == doctest::Approx(0.0));
}

TEST_CASE("replicator velocity sums to zero") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 4;
        Matrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a(i, j) = g(rng);
        const TangentVector v = replicator_field(SimplexPoint(oracle::random_simplex(rng, n)), Landscape::linear(a));
        CHECK(std::abs(sum(v.components())) <= 1e-12);
    }
}

TEST_CASE("ecological_field") {
    const SimplexPoint x({0.5, 0.25, 0.25});
    const Landscape g = Landscape::scaled(Landscape::linear(oracle::rps()), 3.0);
    const TangentVector v = ecological_field(x, g);
    const TangentVector r = replicator_field(x, Landscape::linear(oracle::rps()));
    for (std::size_t i = 0; i < 3; ++i) CHECK(v[i] == doctest::Approx(3.0 * r[i]));

    CHECK(code_of([&] { ecological_field(x, Landscape::constant({1, 1, 1})); }) ==
          ErrorCode::NotSimplexPreserving);
}

TEST_CASE("Lotka-Volterra fields") {
    const Landscape f = Landscape::linear(oracle::rps());
    const Vector v = lv_field(OrthantPoint({2, 1, 1}), f);
    CHECK(v == Vector{0, 1, -1});
    const Vector s = shifted_lv_field(OrthantPoint({2, 1, 1}), f);
    CHECK(s == Vector{0, 0.25, -0.25});
}

TEST_CASE("coupled replicator field") {
    const auto f = CoupledLandscape::bilinear({}, oracle::matching_pennies());
    const auto g = CoupledLandscape::bilinear({}, oracle::matching_pennies().scaled(-1.0));
    const auto [vp, vq] = coupled_replicator_field(CoupledState{barycenter(2), barycenter(2)}, f, g);
    for (double c : vp.components()) CHECK(c == doctest::Approx(0.0));
    for (double c : vq.components()) CHECK(c == doctest::Approx(0.0));
}

TEST_CASE("integrate keeps simplex runs on the simplex") {
    const Trajectory t =
        integrate(Replicator{Landscape::linear(oracle::rps())}, SimplexPoint({0.6, 0.3, 0.1}), 0.01, 2000);
    CHECK(t.size() == 2001);
    CHECK_FALSE(t.truncated);
    for (const Vector& x : t.states) {
        REQUIRE(std::abs(sum(x) - 1.0) <= 1e-9);
        for (double v : x) REQUIRE(v > 0.0);
    }
    CHECK(t.times.back() == doctest::Approx(20.0));
}

TEST_CASE("integrate matches the hawk-dove logistic solution") {
    // p' = p (1 - p) (1 - 2p): separable, with implicit solution
    // log p + log(1 - p) - 2 log|1 - 2p| = t + const.
    const Trajectory t =
        integrate(Replicator{Landscape::linear(oracle::hawk_dove())}, SimplexPoint({0.9, 0.1}), 0.01, 500);
    auto invariant = [](double p) { return std::log(p) + std::log(1 - p) - 2.0 * std::log(std::abs(1 - 2 * p)); };
    const double c0 = invariant(0.9);
    for (std::size_t k = 0; k < t.size(); k += 50) {
        CHECK(invariant(t.states[k][0]) - c0 == doctest::Approx(t.times[k]).epsilon(1e-8));
    }
}

TEST_CASE("integrate errors") {
    const Replicator rep{Landscape::linear(oracle::rps())};
    CHECK(code_of([&] { integrate(rep, barycenter(3), 0.0, 10); }) == ErrorCode::StepSizeInvalid);
    CHECK(code_of([&] { integrate(rep, barycenter(3), std::nan(""), 10); }) == ErrorCode::StepSizeInvalid);
    CHECK(code_of([&] { integrate(rep, OrthantPoint({1, 1, 1}), 0.1, 10); }) == ErrorCode::KindMismatch);
    CHECK(code_of([&] { integrate(rep, barycenter(3), 0.1, 10, State{OrthantPoint({1, 1, 1})}); }) ==
          ErrorCode::KindMismatch);
}

TEST_CASE("integrate truncates on positivity loss") {
    // x' = x * (-1000): explicit RK4 with dt = 0.01 overshoots below zero.
    const LotkaVolterra decay{Landscape::constant({-1000.0, -1000.0})};
    const Trajectory t = integrate(decay, OrthantPoint({1, 1}), 0.01, 100);
    CHECK(t.truncated);
    CHECK(t.failure.find("PositivityLoss") != std::string::npos);
    CHECK(t.size() < 101);
}

TEST_CASE("LV with RPS conserves the total and records diagnostics") {
    const Trajectory t = integrate(LotkaVolterra{Landscape::linear(oracle::rps())}, OrthantPoint({2, 1, 1}), 0.01,
                                   1000, State{OrthantPoint({1, 1, 1})});
    for (const auto& d : t.diagnostics) {
        REQUIRE(d.state_total == doctest::Approx(4.0).epsilon(1e-10));
        REQUIRE(d.divergence.has_value());
    }
    CHECK(t.diagnostics.front().mean_fitness == doctest::Approx(0.0));
}

TEST_CASE("normalize_lv_trajectory and correspondence") {
    const Matrix a{{0.0, 1.0, -0.5}, {-0.3, 0.0, 0.8}, {0.6, -0.7, 0.0}};
    for (const VectorField field : {VectorField{LotkaVolterra{Landscape::linear(a)}},
                                    VectorField{ShiftedLotkaVolterra{Landscape::linear(a)}}}) {
        const Trajectory t = integrate(field, OrthantPoint({0.5, 0.3, 0.4}), 0.001, 2000);
        const NormalizedTrajectory y = normalize_lv_trajectory(t);
        CHECK(y.trajectory.size() == t.size());
        CHECK(y.altered_fitness.size() == t.size());
        for (const Vector& s : y.trajectory.states) REQUIRE(std::abs(sum(s) - 1.0) <= 1e-12);
        CHECK(correspondence_residual(y) <= 1e-5);
    }
    CHECK(code_of([] {
              normalize_lv_trajectory(integrate(Replicator{Landscape::linear(oracle::rps())}, barycenter(3), 0.1, 2));
          }) == ErrorCode::KindMismatch);
}

TEST_CASE("log_sum_exp and softmax") {
    CHECK(log_sum_exp(Vector{0.0, 0.0}) == doctest::Approx(std::log(2.0)));
    CHECK(log_sum_exp(Vector{1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)));
    const Vector s = softmax(Vector{0.0, 1.0});
    CHECK(s[0] == doctest::Approx(oracle::kSoftmaxAtOne).epsilon(1e-15));
    CHECK(s[0] + s[1] == doctest::Approx(1.0));
}

TEST_CASE("exp_family_solver reproduces the log-linear closed form") {
    const double alpha = 0.4;
    const Vector b{0.3, -0.1, 0.2};
    Matrix a(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) a(i, j) = alpha * ((i == j ? 1.0 : 0.0) * -3.0 + 1.0);
    const Vector x0{0.6, 0.3, 0.1};
    const double dt = 0.01;
    const ExpFamilyRun run = exp_family_solver(Landscape::log_linear(a, b), SimplexPoint(x0), dt, 500);
    for (std::size_t k = 0; k < run.trajectory.size(); k += 25) {
        const Vector expected = oracle::log_linear_closed_form(alpha, b, x0, run.trajectory.times[k]);
        for (std::size_t i = 0; i < 3; ++i) REQUIRE(std::abs(run.trajectory.states[k][i] - expected[i]) <= 1e-9);
    }
    // Central differences of G track the recorded mean fitness to second order.
    const double coarse = normalizer_residual(run);
    const double fine = normalizer_residual(exp_family_solver(Landscape::log_linear(a, b), SimplexPoint(x0), dt / 2, 1000));
    CHECK(coarse <= 1e-4);
    CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.05));

    const Trajectory rk = integrate(Replicator{Landscape::log_linear(a, b)}, SimplexPoint(x0), dt, 500);
    CHECK(sup_distance(run.trajectory, rk) <= 1e-8);
}

TEST_CASE("exp_family_solver with a constant landscape") {
    // v' = (0, 1): x = softmax(t) from the barycenter of two types.
    const ExpFamilyRun run = exp_family_solver(Landscape::constant({0.0, 1.0}), barycenter(2), 0.1, 10);
    CHECK(run.trajectory.back()[0] == doctest::Approx(oracle::kSoftmaxAtOne).epsilon(1e-12));
    CHECK(run.params.back().normalizer == doctest::Approx(std::log(1.0 + oracle::kE) - std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("coupled exp-family solver agrees with RK4") {
    const auto f = CoupledLandscape::bilinear({}, oracle::matching_pennies());
    const auto g = CoupledLandscape::bilinear({}, oracle::matching_pennies().scaled(-1.0));
    const CoupledState s0{SimplexPoint({0.6, 0.4}), SimplexPoint({0.45, 0.55})};
    const CoupledExpFamilyRun run = coupled_exp_family_solver(f, g, s0, 0.005, 2000);
    const Trajectory rk = integrate(CoupledReplicator{f, g}, s0, 0.005, 2000);
    CHECK(sup_distance(run.trajectory, rk) <= 1e-8);
}

TEST_CASE("sup_distance and orbit_gap") {
    const Trajectory a = integrate(Replicator{Landscape::linear(oracle::rps())}, SimplexPoint({0.5, 0.3, 0.2}), 0.01, 100);
    CHECK(sup_distance(a, a) == 0.0);
    CHECK(orbit_gap(a, a) == 0.0);
    Trajectory b = a;
    b.states[10][0] += 1e-3;
    b.states[10][1] -= 1e-3;
    CHECK(sup_distance(a, b) == doctest::Approx(1e-3));
    CHECK(orbit_gap(b, a) > 0.0);
    CHECK(orbit_gap(b, a) <= std::sqrt(2.0) * 1e-3);
}

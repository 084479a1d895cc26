#include <doctest.h>

#include "gfrag/error.hpp"
#include "gfrag/lamperti.hpp"
#include "gfrag/numeric.hpp"

#include <chrono>
#include <cmath>

using namespace gfrag;

namespace {

PathGrid drift_path(double slope, double horizon, double step) {
    return sample_path(LevyTriplet{slope, 0.0, FiniteAtoms{}}, horizon, step, 1);
}

}  // namespace

TEST_CASE("clock increment is exact for linear paths") {
    // ∫₀^2 e^{0.5·(1 − 0.3u)} du
    const double exact = std::exp(0.5) * (1.0 - std::exp(-0.3)) / 0.15;
    CHECK(clock_increment(2.0, 1.0, 1.0 - 0.6, -0.5) == doctest::Approx(exact).epsilon(1e-14));
    CHECK(clock_increment(2.0, 1.0, 1.0, -0.5) == doctest::Approx(2.0 * std::exp(0.5)).epsilon(1e-15));
    CHECK(clock_increment(0.0, 1.0, 3.0, -0.5) == 0.0);
}

TEST_CASE("pure drift: tau_t = -ln(1 - t) and absorption at 1") {
    const auto xi = drift_path(-1.0, 40.0, 0.05);
    const auto p = lamperti_transform(xi, -1.0, 1.0);
    REQUIRE(p.absorption_time);
    CHECK(*p.absorption_time == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& n : p.nodes) {
        if (n.t > 0.99) break;
        // X(t) = exp(−τ_t) = 1 − t
        CHECK(n.x == doctest::Approx(1.0 - n.t).epsilon(1e-12));
    }
    const LampertiClock clock(xi, -1.0);
    CHECK(clock.inverse(0.5) == doctest::Approx(-std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("lamperti transform with a horizon") {
    const auto xi = drift_path(-1.0, 40.0, 0.05);
    const auto zero = lamperti_transform(xi, -1.0, 2.0, 0.0);
    REQUIRE(zero.nodes.size() == 1);
    CHECK(zero.nodes[0].t == 0.0);
    CHECK(zero.nodes[0].x == 2.0);
    const auto p = lamperti_transform(xi, -1.0, 1.0, 0.5);
    CHECK(p.nodes.back().t == 0.5);
    CHECK(p.nodes.back().x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(!p.absorption_time);
    CHECK_THROWS_AS(lamperti_transform(drift_path(-1.0, 2.0, 0.05), -1.0, 1.0), PathTooShort);
}

TEST_CASE("pathwise self-similarity is exact under a shared path") {
    const auto ref = reference_dyadic_triplet();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto xi = sample_path(ref, 60.0, 0.01, seed);
        const auto one = lamperti_transform(xi, -1.0, 1.0);
        const auto two = lamperti_transform(xi, -1.0, 2.0);
        REQUIRE(one.nodes.size() == two.nodes.size());
        for (std::size_t i = 0; i < one.nodes.size(); ++i) {
            CHECK(two.nodes[i].x == 2.0 * one.nodes[i].x);
            CHECK(two.nodes[i].x_left == 2.0 * one.nodes[i].x_left);
            CHECK(two.nodes[i].t == 2.0 * one.nodes[i].t);
        }
        CHECK(*two.absorption_time == 2.0 * *one.absorption_time);
        for (std::size_t i = 1; i < one.nodes.size(); ++i) CHECK(one.nodes[i].t > one.nodes[i - 1].t);
    }
}

TEST_CASE("clock is increasing and its inverse round-trips on nodes") {
    const auto xi = sample_path(reference_dyadic_triplet(), 10.0, 0.01, 8);
    const LampertiClock clock(xi, -0.5);
    for (std::size_t i = 1; i < xi.times.size(); ++i) {
        if (xi.times[i] > xi.times[i - 1]) CHECK(clock.at(i) > clock.at(i - 1));
        CHECK(std::abs(clock.inverse(clock.at(i)) - xi.times[i]) < 1e-10);
        CHECK(clock(xi.times[i]) == doctest::Approx(clock.at(i)).epsilon(1e-13));
    }
}

TEST_CASE("absorption_time examples") {
    CHECK(absorption_time(drift_path(-2.0, 30.0, 0.1), -1.0) == doctest::Approx(0.5).epsilon(1e-9));
    // Drift −1 with one jump of −1 at time 1.
    PathGrid p;
    for (int i = 0; i <= 10; ++i) {
        p.times.push_back(0.1 * i);
        p.values.push_back(-0.1 * i);
    }
    p.times.back() = 1.0;
    p.values.back() = -1.0;
    p.times.push_back(1.0);
    p.values.push_back(-2.0);
    p.jump_marks.push_back(JumpMark{p.values.size() - 1, -1.0});
    for (int i = 1; i <= 400; ++i) {
        p.times.push_back(1.0 + 0.1 * i);
        p.values.push_back(-2.0 - 0.1 * i);
    }
    CHECK(absorption_time(p, -1.0) == doctest::Approx(1.0 - std::exp(-1.0) + std::exp(-2.0)).epsilon(1e-9));

    const auto long_drift = drift_path(-1.0, 40.0, 0.1);
    const double tight = absorption_time(long_drift, -1.0, {1e-12, 0.0});
    CHECK(std::abs(tight - 1.0) < 1e-9);
    double prev = 0.0;
    for (double cut : {1e-6, 1e-9, 1e-12}) {
        const double v = absorption_time(long_drift, -1.0, {cut, 0.0});
        CHECK(v >= prev);
        prev = v;
    }
    CHECK_THROWS_AS(absorption_time(drift_path(-1.0, 3.0, 0.1), -1.0), PathTooShort);
}

TEST_CASE("exponential functional sampling") {
    const LevyTriplet drift{-2.0, 0.0, FiniteAtoms{}};
    const auto degenerate = sample_exp_functional(drift, -1.0, 20, 5);
    for (double v : degenerate.values) CHECK(v == doctest::Approx(0.5).epsilon(1e-9));

    const auto model = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.5);
    const auto spine = build_spine_triplet(model);
    const auto a = sample_exp_functional(spine, -0.5, 3000, 11);
    const auto b = sample_exp_functional(spine, -0.5, 3000, 11, {}, 3);
    CHECK(a.values == b.values);
    for (double v : a.values) CHECK((v > 0.0 && std::isfinite(v)));

    const auto report = inverse_moment_check(a, model);
    CHECK(report.reference == doctest::Approx(1.835049919403785).epsilon(1e-12));
    CHECK(!report.low_power);
    CHECK(std::abs(report.z_score) < 3.0);
    CHECK(report.pass);

    ExpFunctionalSamples few;
    few.values = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0};
    const auto small = inverse_moment_check(few, model);
    CHECK(small.low_power);
    CHECK(!small.pass);
}

TEST_CASE("density estimate of I") {
    const auto model = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.2);
    const auto spine = build_spine_triplet(model);
    const auto s = sample_exp_functional(spine, -0.2, 20000, 3, {0.02});
    const auto k = estimate_density_k(s);
    CHECK(std::abs(density_mass(k) - 1.0) < 0.02);
    double peak = 0.0;
    for (double v : k.values) {
        CHECK(v >= 0.0);
        peak = std::max(peak, v);
    }
    const double first_decade_end = k.grid.front() * 10.0;
    for (std::size_t i = 0; i < k.grid.size() && k.grid[i] <= first_decade_end; ++i) CHECK(k.values[i] < 0.5 * peak);

    ExpFunctionalSamples flat;
    flat.values.assign(2000, 1.5);
    CHECK_THROWS_AS(estimate_density_k(flat), InsufficientData);
    ExpFunctionalSamples tiny;
    tiny.values.assign(10, 1.5);
    CHECK_THROWS_AS(estimate_density_k(tiny), InsufficientData);
}

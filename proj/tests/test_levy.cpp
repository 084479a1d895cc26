#include <doctest.h>

#include "gfrag/error.hpp"
#include "gfrag/levy.hpp"
#include "gfrag/numeric.hpp"

#include <cmath>
#include <numbers>

using namespace gfrag;

namespace {

// Closed-form ψ of the reference model.
double psi_ref(double q) { return -3.0 * q + q * q + std::pow(2.0, -q) - 1.0; }

LevyTriplet exponential_density_triplet(double drift, double var) {
    JumpDensity d;
    d.density = [](double y) { return std::exp(y); };
    d.support_lo = -40.0;
    d.support_hi = 0.0;
    d.integrability = 5.0;
    d.description = "e^y on y<0";
    return LevyTriplet{drift, var, d};
}

// ∫_{-∞}^0 (e^{qy} − 1 − qy 1{|y|<1}) e^y dy, by hand.
double exponential_density_jump_term(double q) {
    return 1.0 / (q + 1.0) - 1.0 - q * (-1.0 + 2.0 / std::numbers::e);
}

}  // namespace

TEST_CASE("laplace exponent examples") {
    const auto ref = reference_dyadic_triplet();
    CHECK(laplace_exponent(ref, 1.0) == doctest::Approx(-2.5).epsilon(1e-15));
    CHECK(laplace_exponent(ref, 0.0) == 0.0);
    const LevyTriplet gauss{0.0, 2.0, FiniteAtoms{}};
    CHECK(laplace_exponent(gauss, 1.0) == 1.0);
    for (double q : {0.1, 0.7, 2.3}) CHECK(laplace_exponent(ref, q) == doctest::Approx(psi_ref(q)).epsilon(1e-14));
}

TEST_CASE("density laplace exponent matches a hand-integrated case") {
    const auto t = exponential_density_triplet(0.3, 0.5);
    for (double q : {0.25, 1.0, 3.0}) {
        const double expect = 0.3 * q + 0.25 * q * q + exponential_density_jump_term(q);
        CHECK(laplace_exponent(t, q) == doctest::Approx(expect).epsilon(1e-9));
    }
    CHECK_THROWS_AS(laplace_exponent(t, 6.0), DomainError);
}

TEST_CASE("laplace exponent derivative against central differences") {
    const auto ref = reference_dyadic_triplet();
    const auto dens = exponential_density_triplet(-0.2, 0.1);
    for (const auto* t : {&ref, &dens}) {
        for (double q : {0.2, 1.0, 2.5}) {
            const double h = 1e-5;
            const double fd = (laplace_exponent(*t, q + h) - laplace_exponent(*t, q - h)) / (2 * h);
            CHECK(laplace_exponent_derivative(*t, q) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("psi convexity on a grid") {
    const auto ref = reference_dyadic_triplet();
    const auto grid = lin_space(-2.0, 6.0, 101);
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        const double chord = 0.5 * (laplace_exponent(ref, grid[i - 1]) + laplace_exponent(ref, grid[i + 1]));
        CHECK(laplace_exponent(ref, grid[i]) <= chord + 1e-12);
    }
}

TEST_CASE("drift sign") {
    CHECK(drift_sign(reference_dyadic_triplet()) == DriftSign::negative);
    CHECK(laplace_exponent_derivative(reference_dyadic_triplet(), 0.0) ==
          doctest::Approx(-3.0 - std::numbers::ln2).epsilon(1e-15));
    CHECK(drift_sign(LevyTriplet{0.0, 2.0, FiniteAtoms{}}) == DriftSign::zero);
    CHECK(drift_sign(LevyTriplet{1.0, 0.0, FiniteAtoms{{JumpAtom{1.0, 1.0}}}}) == DriftSign::positive);
    // b + ∫_{y<−1} y e^y dy = b − 2/e (tail below −40 negligible).
    CHECK(drift_sign(exponential_density_triplet(0.7, 0.0)) == DriftSign::negative);
    CHECK(drift_sign(exponential_density_triplet(0.8, 0.0)) == DriftSign::positive);
}

TEST_CASE("validate_triplet rejects structural failures") {
    CHECK_NOTHROW(validate_triplet(reference_dyadic_triplet()));
    CHECK_THROWS_AS(validate_triplet(LevyTriplet{-1.0, 1.0, FiniteAtoms{}}), ValidationFailure);
    CHECK_THROWS_AS(validate_triplet(LevyTriplet{-1.0, 1.0, FiniteAtoms{{JumpAtom{0.5, 1.0}}}}), ValidationFailure);
    CHECK_THROWS_AS(validate_triplet(LevyTriplet{-1.0, 0.0, FiniteAtoms{{JumpAtom{-0.5, 1.0}}}}), ValidationFailure);
    CHECK_NOTHROW(validate_triplet(LevyTriplet{1.0, 0.0, FiniteAtoms{{JumpAtom{-0.5, 1.0}}}}));
    CHECK_THROWS_AS(validate_triplet(LevyTriplet{-1.0, -1.0, FiniteAtoms{{JumpAtom{-0.5, 1.0}}}}), ValidationFailure);
    CHECK_NOTHROW(validate_triplet(exponential_density_triplet(0.0, 0.0 + 1.0)));
}

TEST_CASE("sample_path: deterministic drift is a straight line") {
    const LevyTriplet drift{-3.0, 0.0, FiniteAtoms{}};
    const auto p = sample_path(drift, 1.0, 0.1, 42);
    CHECK(p.times.front() == 0.0);
    CHECK(p.times.back() == 1.0);
    CHECK(p.values.back() == doctest::Approx(-3.0).epsilon(1e-14));
    CHECK(p.jump_marks.empty());
    for (std::size_t i = 0; i < p.times.size(); ++i) CHECK(p.values[i] == doctest::Approx(-3.0 * p.times[i]));
}

TEST_CASE("sample_path: reproducible and jump marks bit-exact") {
    const auto ref = reference_dyadic_triplet();
    const auto a = sample_path(ref, 5.0, 0.01, 99);
    const auto b = sample_path(ref, 5.0, 0.01, 99);
    CHECK(a.times == b.times);
    CHECK(a.values == b.values);
    REQUIRE(a.jump_marks.size() == b.jump_marks.size());
    const auto c = sample_path(ref, 5.0, 0.01, 100);
    CHECK(c.values != a.values);
    for (std::size_t s = 0; s < 50; ++s) {
        const auto p = sample_path(ref, 5.0, 0.05, s);
        REQUIRE(p.times.size() == p.values.size());
        for (std::size_t i = 1; i < p.times.size(); ++i) CHECK(p.times[i] >= p.times[i - 1]);
        for (const auto& m : p.jump_marks) {
            CHECK(m.size < 0.0);
            CHECK(m.size == p.values[m.index] - p.values[m.index - 1]);
            CHECK(p.times[m.index] == p.times[m.index - 1]);
        }
    }
}

TEST_CASE("sample_path: Poisson superposition of two atoms") {
    const LevyTriplet t{-1.0, 0.5, FiniteAtoms{{JumpAtom{-0.3, 2.0}, JumpAtom{0.2, 3.0}}}};
    const PathSimulator sim(t, 10.0);
    std::vector<double> counts;
    for (std::uint64_t s = 0; s < 10000; ++s) counts.push_back(static_cast<double>(sample_path(t, 10.0, 10.0, s).jump_marks.size()));
    const auto m = mean_and_se(counts);
    CHECK(std::abs(m.mean - 50.0) < 3.0 * m.std_error);
    CHECK(sim.jump_rate() == 5.0);
}

TEST_CASE("psi consistency by Monte Carlo") {
    const auto ref = reference_dyadic_triplet();
    const PathSimulator sim(ref, 1.0);
    for (double q : {0.5, 1.0}) {
        std::vector<double> v;
        for (std::uint64_t s = 0; s < 100000; ++s) {
            auto st = sim.stream(s);
            PathStep step;
            do step = st.next();
            while (step.jump);
            v.push_back(std::exp(q * step.value));
        }
        const auto m = mean_and_se(v);
        const double expect = std::exp(laplace_exponent(ref, q));
        CHECK(std::abs(m.mean - expect) < 3.0 * m.std_error);
    }
}

TEST_CASE("density simulation reproduces mean and exponential moment") {
    const auto t = exponential_density_triplet(0.2, 0.3);
    const PathSimulator sim(t, 0.25);
    CHECK(sim.jump_rate() > 0.0);
    std::vector<double> ends, expq;
    for (std::uint64_t s = 0; s < 40000; ++s) {
        auto st = sim.stream(s);
        while (st.mesh_index() < 4) st.next();
        ends.push_back(st.value());
        expq.push_back(std::exp(0.5 * st.value()));
    }
    const auto m = mean_and_se(ends);
    CHECK(std::abs(m.mean - laplace_exponent_derivative(t, 0.0)) < 3.5 * m.std_error);
    const auto e = mean_and_se(expq);
    CHECK(std::abs(e.mean - std::exp(laplace_exponent(t, 0.5))) < 3.5 * e.std_error);
}

TEST_CASE("stream prefixes are independent of how far they are read") {
    const PathSimulator sim(reference_dyadic_triplet(), 0.1);
    auto a = sim.stream(5);
    auto b = sim.stream(5);
    for (int i = 0; i < 200; ++i) {
        const auto x = a.next();
        const auto y = b.next();
        CHECK(x.value == y.value);
        CHECK(x.time == y.time);
    }
}

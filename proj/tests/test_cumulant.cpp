#include <doctest.h>

#include "gfrag/cumulant.hpp"
#include "gfrag/error.hpp"
#include "gfrag/numeric.hpp"

#include <cmath>
#include <numbers>

using namespace gfrag;

namespace {

double kappa_ref(double q) { return -3.0 * q + q * q + std::pow(2.0, 1.0 - q) - 1.0; }
double kappa_ref_prime(double q) { return -3.0 + 2.0 * q - 2.0 * std::numbers::ln2 * std::pow(2.0, -q); }

// Independent root oracle: dense scan of the closed form, then plain bisection.
double scan_root(double lo, double hi, bool downward) {
    const int n = 20000;
    double prev = kappa_ref(lo);
    for (int i = 1; i <= n; ++i) {
        const double q = lo + (hi - lo) * i / n;
        const double cur = kappa_ref(q);
        if ((downward && prev > 0 && cur <= 0) || (!downward && prev < 0 && cur >= 0)) {
            double a = q - (hi - lo) / n, b = q;
            for (int k = 0; k < 200; ++k) {
                const double m = 0.5 * (a + b);
                if ((kappa_ref(m) > 0) == downward) a = m; else b = m;
            }
            return 0.5 * (a + b);
        }
        prev = cur;
    }
    return std::nan("");
}

// Reference-model values obtained with 30-digit arithmetic.
constexpr double kOmegaMinus = 0.248444028875810106894867809701;
constexpr double kOmegaPlus = 3.24321091221245175070647634492;
constexpr double kPrimeAtOmegaMinus = -3.67009983880756974336459700765;

}  // namespace

TEST_CASE("kappa of the reference model") {
    const auto m = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.2);
    CHECK(kappa(m, 1.0) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(kappa(m, 1e-9) == doctest::Approx(1.0).epsilon(1e-7));
    for (double q : {0.05, 0.5, 2.0, 5.0}) {
        CHECK(kappa(m, q) == doctest::Approx(kappa_ref(q)).epsilon(1e-13));
        CHECK(kappa_prime(m, q) == doctest::Approx(kappa_ref_prime(q)).epsilon(1e-13));
    }
    CHECK_THROWS_AS(kappa(m, 0.0), DomainError);
}

TEST_CASE("roots of the reference model match independent oracles") {
    const auto m = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.2);
    CHECK(std::abs(m.omega_minus() - scan_root(1e-4, 2.0, true)) < 1e-10);
    CHECK(std::abs(m.omega_plus() - scan_root(1.0, 10.0, false)) < 1e-10);
    CHECK(std::abs(m.omega_minus() - kOmegaMinus) < 1e-14);
    CHECK(std::abs(m.omega_plus() - kOmegaPlus) < 1e-13);
    CHECK(std::abs(m.kprime_at_omega_minus() - kPrimeAtOmegaMinus) < 1e-13);
    CHECK(std::abs(kappa(m, m.omega_minus())) < m.root_tolerance());
    CHECK(std::abs(kappa(m, m.omega_plus())) < m.root_tolerance());
    CHECK(m.inverse_moment() == doctest::Approx(0.734019967761514).epsilon(1e-12));
    const auto m5 = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.5);
    CHECK(m5.inverse_moment() == doctest::Approx(1.835049919403785).epsilon(1e-12));
}

TEST_CASE("kappa is convex and strictly negative between the roots") {
    const auto m = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.2);
    const auto grid = lin_space(0.01, 8.0, 100);
    for (std::size_t i = 1; i + 1 < grid.size(); ++i)
        CHECK(kappa(m, grid[i]) <= 0.5 * (kappa(m, grid[i - 1]) + kappa(m, grid[i + 1])) + 1e-12);
    for (double q : lin_space(m.omega_minus() + 1e-6, m.omega_plus() - 1e-6, 50)) CHECK(kappa(m, q) < 0.0);
}

TEST_CASE("kappa_prime matches finite differences, and vanishes at the minimiser") {
    const auto m = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.2);
    for (double q : lin_space(0.05, 6.0, 30)) {
        const double h = 1e-6;
        const double fd = (kappa(m, q + h) - kappa(m, q - h)) / (2 * h);
        CHECK(std::abs(kappa_prime(m, q) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
    // Golden-section minimisation of κ on [0.5, 3].
    double a = 0.5, b = 3.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int i = 0; i < 200; ++i) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        if (kappa_ref(c) < kappa_ref(d)) b = d; else a = c;
    }
    const double argmin = 0.5 * (a + b);
    CHECK(argmin == doctest::Approx(1.71162840965138).epsilon(1e-7));
    CHECK(std::abs(kappa_prime(m, argmin)) < 1e-6);
}

TEST_CASE("NoNegativeRegion when kappa stays positive") {
    const LevyTriplet t{0.0, 2.0, FiniteAtoms{{JumpAtom{-std::numbers::ln2, 1.0}}}};
    CHECK_THROWS_AS(CumulantModel::from_triplet(t, -0.2), NoNegativeRegion);
}

TEST_CASE("Boltzmann family closed form") {
    CHECK(kappa_theta(1.5, 3.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(kappa_theta(1.25, 1.75) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(kappa_theta(1.5, 2.5) < 0.0);
    for (double theta : {1.05, 1.1, 1.25, 1.4, 1.5}) {
        CHECK(std::abs(kappa_theta(theta, theta + 0.5)) < 1e-15);
        CHECK(std::abs(kappa_theta(theta, theta + 1.5)) < 1e-15);
        // Against the original quotient form at a generic point away from poles.
        const double q = theta + 0.83;
        const double quotient = std::cos(std::numbers::pi * (q - theta)) / std::sin(std::numbers::pi * (q - 2 * theta)) *
                                std::tgamma(q - theta) / std::tgamma(q - 2 * theta);
        CHECK(kappa_theta(theta, q) == doctest::Approx(quotient).epsilon(1e-12));
        const double h = 1e-6;
        for (double x : {theta + 0.3, theta + 1.0, theta + 1.9}) {
            const double fd = (kappa_theta(theta, x + h) - kappa_theta(theta, x - h)) / (2 * h);
            CHECK(kappa_theta_prime(theta, x) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
    CHECK_THROWS_AS(kappa_theta(1.5, 1.5), DomainError);
    CHECK_THROWS_AS(kappa_theta(1.5, 4.0 - 1e-9), DomainError);
    CHECK_THROWS_AS(kappa_theta(1.6, 2.5), DomainError);
    CHECK(kappa_prime(CumulantModel::boltzmann(1.5), 2.0) < 0.0);
}

TEST_CASE("Boltzmann roots") {
    for (double theta : {1.05, 1.1, 1.25, 1.4, 1.5}) {
        const auto m = CumulantModel::boltzmann(theta);
        CHECK(std::abs(m.omega_minus() - (theta + 0.5)) < 1e-9);
        CHECK(std::abs(m.omega_plus() - (theta + 1.5)) < 1e-9);
        CHECK(m.alpha() == doctest::Approx(1.0 - theta));
        CHECK(m.triplet() == nullptr);
    }
}

TEST_CASE("spine exponent") {
    const auto m = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.2);
    CHECK(std::abs(spine_exponent(m, 0.0)) < 1e-12);
    CHECK(spine_exponent(m, 1.0) == doctest::Approx(-2.34491576782007276).epsilon(1e-12));
    for (double q : {0.3, 1.7}) CHECK(spine_exponent(m, q) == kappa(m, m.omega_minus() + q));
    CHECK(std::abs(spine_exponent(CumulantModel::boltzmann(1.5), 1.0)) < 1e-9);
}

TEST_CASE("tilted measure") {
    const auto m = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.2);
    const auto pi = std::get<FiniteAtoms>(tilted_measure(m));
    REQUIRE(pi.atoms.size() == 1);
    CHECK(pi.atoms[0].location == doctest::Approx(-std::numbers::ln2).epsilon(1e-15));
    CHECK(pi.atoms[0].rate == doctest::Approx(1.68360765114338595).epsilon(1e-13));

    const LevyTriplet far{-1.0, 1.0, FiniteAtoms{{JumpAtom{-20.0, 1.0}}}};
    const auto mf = CumulantModel::from_triplet(far, -0.2);
    const auto pf = std::get<FiniteAtoms>(tilted_measure(mf));
    REQUIRE(pf.atoms.size() == 2);
    CHECK(pf.atoms[0].location == -20.0);
    CHECK(pf.atoms[0].rate == doctest::Approx(std::exp(-20.0 * mf.omega_minus())));
    CHECK(pf.atoms[1].location == doctest::Approx(-std::exp(-20.0)).epsilon(1e-6));
    CHECK(pf.atoms[1].rate == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("spine triplet identity") {
    const auto m = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.2);
    const auto s = build_spine_triplet(m);
    CHECK(s.drift == doctest::Approx(-2.50311194224837979).epsilon(1e-12));
    CHECK(s.gaussian_var == 2.0);
    CHECK(verify_spine_triplet(m, s) < 1e-8);
    CHECK(drift_sign(s) == DriftSign::negative);

    const LevyTriplet pure{0.5, 0.0, FiniteAtoms{{JumpAtom{-std::numbers::ln2, 4.0}}}};
    const auto mp = CumulantModel::from_triplet(pure, -0.3);
    CHECK(verify_spine_triplet(mp, build_spine_triplet(mp)) < 1e-8);

    auto bad = s;
    bad.drift += 0.1;
    CHECK_THROWS_AS(verify_spine_triplet(m, bad), ValidationFailure);
}

TEST_CASE("regime classification") {
    const auto m2 = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.2);
    CHECK(regime_classify(m2).regime == Regime::AbsolutelyContinuous);
    const auto m5 = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.5);
    const auto c = regime_classify(m5);
    CHECK(c.regime == Regime::SingularDimKnown);
    REQUIRE(c.predicted_dimension);
    CHECK(*c.predicted_dimension == doctest::Approx(0.496888057751620).epsilon(1e-12));
    CHECK(c.lower_bound_corrected_reading);
    CHECK(c.lower_bound_literal_reading);
    CHECK(regime_classify(CumulantModel::boltzmann(1.5)).regime == Regime::AbsolutelyContinuous);
    const auto far = regime_classify(-5.0, kOmegaMinus, kOmegaPlus);
    CHECK(far.regime == Regime::Singular);
    CHECK(!far.predicted_dimension);
    CHECK(far.dimension_lower_bound);
    CHECK_THROWS_AS(regime_classify(0.1, kOmegaMinus, kOmegaPlus), DomainError);
}

TEST_CASE("validate_model") {
    CHECK_NOTHROW(validate_model(CumulantModel::from_triplet(reference_dyadic_triplet(), -0.2)));
    CHECK_NOTHROW(validate_model(CumulantModel::boltzmann(1.25)));
    CHECK_THROWS_AS(CumulantModel::from_triplet(reference_dyadic_triplet(), 0.2), ValidationFailure);
}

TEST_CASE("density-based cumulant against a hand-integrated case") {
    // λ(y) = e^y on y < 0: ∫(1 − e^y)^q e^y dy = 1/(q+1) and the compensated
    // ψ jump term is 1/(q+1) − 1 − q(2/e − 1).
    JumpDensity d;
    d.density = [](double y) { return std::exp(y); };
    d.support_lo = -40.0;
    d.support_hi = 0.0;
    d.integrability = 10.0;
    const LevyTriplet t{-1.0, 0.5, d};
    const TripletSource src{t, -0.3};
    auto closed = [](double q) {
        return -q + 0.25 * q * q + 2.0 / (q + 1.0) - 1.0 - q * (2.0 / std::numbers::e - 1.0);
    };
    for (double q : {0.2, 1.0, 2.5}) {
        CHECK(kappa(src, q) == doctest::Approx(closed(q)).epsilon(1e-9));
        const double h = 1e-5;
        CHECK(kappa_prime(src, q) == doctest::Approx((closed(q + h) - closed(q - h)) / (2 * h)).epsilon(1e-6));
    }
    const auto m = CumulantModel::from_triplet(t, -0.3);
    CHECK(std::abs(closed(m.omega_minus())) < 1e-9);
    const auto pi = std::get<JumpDensity>(tilted_measure(m));
    // Both parts of Π have density e^{ωz} e^z here.
    const double z = -0.7, w = m.omega_minus();
    CHECK(pi.density(z) == doctest::Approx(2.0 * std::exp((w + 1.0) * z)).epsilon(1e-12));
}

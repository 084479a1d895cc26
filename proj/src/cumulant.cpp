#include "gfrag/cumulant.hpp"

#include "gfrag/error.hpp"
#include "gfrag/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/cos_pi.hpp>
#include <boost/math/special_functions/sin_pi.hpp>

namespace gfrag {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPoleGuard = 1e-8;

double density_at(const JumpDensity& d, double y) {
    if (y < d.support_lo || y > d.support_hi || y == 0.0) return 0.0;
    return d.density(y);
}

// ∫_{(−∞,0)} (1 − e^y)^q log(1 − e^y)^k Λ(dy) for k ∈ {0, 1}.
double negative_part(const LevyTriplet& t, double q, int log_power) {
    if (const auto* fa = std::get_if<FiniteAtoms>(&t.jumps)) {
        double s = 0.0;
        for (const auto& a : fa->atoms) {
            if (a.location >= 0.0) continue;
            const double u = -std::expm1(a.location);  // 1 − e^y
            const double term = a.rate * std::pow(u, q);
            s += log_power == 0 ? term : term * std::log(u);
        }
        return s;
    }
    const auto& d = std::get<JumpDensity>(t.jumps);
    auto weight = [&](double u) { return log_power == 0 ? std::pow(u, q) : std::pow(u, q) * std::log(u); };
    double total = 0.0;
    // Far part in y; near 0⁻ substitute u = 1 − e^y to regularise (1 − e^y)^q.
    const double split = std::max(-1.0, d.support_lo);
    if (d.support_lo < split)
        total += integrate([&](double y) { return weight(-std::expm1(y)) * density_at(d, y); }, d.support_lo, split);
    const double u_max = -std::expm1(split);
    total += integrate(
        [&](double u) {
            if (u <= 0.0) return 0.0;
            const double y = std::log1p(-u);
            return weight(u) * density_at(d, y) / (1.0 - u);
        },
        0.0, u_max);
    return total;
}

void check_triplet_q(const TripletSource& s, double q) {
    if (!(q > 0.0)) throw DomainError("kappa: q must be > 0, got " + format_double(q));
    if (const auto* d = std::get_if<JumpDensity>(&s.triplet.jumps); d && q > d->integrability)
        throw DomainError("kappa: q = " + format_double(q) + " beyond declared integrability");
}

void check_theta(double theta) {
    if (!(theta > 1.0 && theta <= 1.5)) throw DomainError("kappa_theta: theta must lie in (1, 3/2]");
}

void check_theta_q(double theta, double q) {
    check_theta(theta);
    if (!(q > theta && q < 2.0 * theta + 1.0))
        throw DomainError("kappa_theta: q must lie in (theta, 2 theta + 1)");
    if (q - theta < kPoleGuard || 2.0 * theta + 1.0 - q < kPoleGuard)
        throw DomainError("kappa_theta: q within 1e-8 of a Gamma pole");
}

}  // namespace

double kappa_theta(double theta, double q) {
    check_theta_q(theta, q);
    const double g = boost::math::tgamma(q - theta) * boost::math::tgamma(1.0 + 2.0 * theta - q);
    return boost::math::cos_pi(q - theta) * g / std::numbers::pi;
}

double kappa_theta_prime(double theta, double q) {
    check_theta_q(theta, q);
    const double a = q - theta;
    const double b = 1.0 + 2.0 * theta - q;
    const double g = boost::math::tgamma(a) * boost::math::tgamma(b) / std::numbers::pi;
    const double dlog_g = boost::math::digamma(a) - boost::math::digamma(b);
    return -std::numbers::pi * boost::math::sin_pi(a) * g + boost::math::cos_pi(a) * g * dlog_g;
}

std::pair<double, double> kappa_domain(const CumulantSource& source) {
    if (const auto* b = std::get_if<BoltzmannSource>(&source)) return {b->theta, 2.0 * b->theta + 1.0};
    const auto& t = std::get<TripletSource>(source).triplet;
    if (const auto* d = std::get_if<JumpDensity>(&t.jumps)) return {0.0, d->integrability};
    return {0.0, kInf};
}

double kappa(const CumulantSource& source, double q) {
    if (const auto* b = std::get_if<BoltzmannSource>(&source)) return kappa_theta(b->theta, q);
    const auto& s = std::get<TripletSource>(source);
    check_triplet_q(s, q);
    return laplace_exponent(s.triplet, q) + negative_part(s.triplet, q, 0);
}

double kappa_prime(const CumulantSource& source, double q) {
    if (const auto* b = std::get_if<BoltzmannSource>(&source)) return kappa_theta_prime(b->theta, q);
    const auto& s = std::get<TripletSource>(source);
    check_triplet_q(s, q);
    return laplace_exponent_derivative(s.triplet, q) + negative_part(s.triplet, q, 1);
}

Roots find_roots(const CumulantSource& source, const RootSearchOptions& options) {
    if (options.grid_points < 3) throw DomainError("find_roots: need at least 3 grid points");
    double lo = options.q_lo;
    double hi = 0.0;
    if (const auto* b = std::get_if<BoltzmannSource>(&source)) {
        check_theta(b->theta);
        lo = b->theta + options.q_lo;
        hi = options.q_hi.value_or(2.0 * b->theta + 1.0 - options.q_lo);
    } else {
        const auto& t = std::get<TripletSource>(source).triplet;
        if (const auto* d = std::get_if<JumpDensity>(&t.jumps))
            hi = options.q_hi.value_or(d->integrability);
        else
            hi = options.q_hi.value_or(options.finite_atoms_q_max);
    }
    if (!(hi > lo)) throw DomainError("find_roots: empty scan interval");

    auto f = [&](double q) { return kappa(source, q); };
    const auto grid = lin_space(lo, hi, options.grid_points);
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) values[i] = f(grid[i]);

    // κ is convex, so there are at most two sign changes: + → − at ω₋ and
    // − → + at ω₊.
    std::size_t first_negative = grid.size();
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (values[i] < 0.0) {
            first_negative = i;
            break;
        }
    if (first_negative == grid.size())
        throw NoNegativeRegion("find_roots: kappa > 0 on the whole scan; Cramér hypothesis fails");

    Roots roots;
    if (first_negative == 0) {
        // Root below the scan start: fall back to a bracket reaching towards 0.
        const double tiny = std::get_if<BoltzmannSource>(&source) ? lo - options.q_lo + 1e-7 : 1e-9;
        if (!(f(tiny) > 0.0)) throw NoNegativeRegion("find_roots: no positive region below the first scan point");
        roots.omega_minus = bisect(f, tiny, grid[0], 0.0);
    } else {
        roots.omega_minus = bisect(f, grid[first_negative - 1], grid[first_negative], 0.0);
    }

    roots.omega_plus = kInf;
    for (std::size_t i = first_negative + 1; i < grid.size(); ++i)
        if (values[i] >= 0.0) {
            roots.omega_plus = bisect(f, grid[i - 1], grid[i], 0.0);
            break;
        }

    roots.kprime_at_omega_minus = kappa_prime(source, roots.omega_minus);
    if (!(std::abs(roots.kprime_at_omega_minus) >= options.flat_tolerance))
        throw FlatRoot("find_roots: |kappa'(omega_-)| below tolerance");
    if (std::abs(f(roots.omega_minus)) > options.root_tolerance)
        throw ValidationFailure("find_roots: residual at omega_- exceeds tolerance");
    return roots;
}

CumulantModel CumulantModel::from_triplet(LevyTriplet triplet, double alpha, const RootSearchOptions& options) {
    if (!(alpha < 0.0)) throw ValidationFailure("model: self-similarity index alpha must be < 0");
    validate_triplet(triplet);
    CumulantSource source = TripletSource{std::move(triplet), alpha};
    const Roots roots = find_roots(source, options);
    return CumulantModel(std::move(source), roots, options);
}

CumulantModel CumulantModel::boltzmann(double theta, const RootSearchOptions& options) {
    CumulantSource source = BoltzmannSource{theta};
    const Roots roots = find_roots(source, options);
    return CumulantModel(std::move(source), roots, options);
}

double CumulantModel::alpha() const noexcept {
    if (const auto* b = std::get_if<BoltzmannSource>(&source_)) return 1.0 - b->theta;
    return std::get<TripletSource>(source_).alpha;
}

bool CumulantModel::omega_plus_finite() const noexcept { return std::isfinite(roots_.omega_plus); }

const LevyTriplet* CumulantModel::triplet() const noexcept {
    if (const auto* s = std::get_if<TripletSource>(&source_)) return &s->triplet;
    return nullptr;
}

std::optional<double> CumulantModel::theta() const noexcept {
    if (const auto* b = std::get_if<BoltzmannSource>(&source_)) return b->theta;
    return std::nullopt;
}

double kappa(const CumulantModel& model, double q) { return kappa(model.source(), q); }
double kappa_prime(const CumulantModel& model, double q) { return kappa_prime(model.source(), q); }

double spine_exponent(const CumulantModel& model, double q) {
    if (q == 0.0) return kappa(model, model.omega_minus());
    return kappa(model, model.omega_minus() + q);
}

JumpMeasure tilted_measure(const CumulantModel& model) {
    const LevyTriplet* t = model.triplet();
    if (!t) throw DomainError("tilted_measure: requires a triplet-based model");
    const double w = model.omega_minus();
    if (const auto* fa = std::get_if<FiniteAtoms>(&t->jumps)) {
        std::vector<JumpAtom> raw;
        for (const auto& a : fa->atoms) {
            raw.push_back(JumpAtom{a.location, a.rate * std::exp(w * a.location)});
            if (a.location < 0.0) {
                const double u = -std::expm1(a.location);
                raw.push_back(JumpAtom{std::log(u), a.rate * std::pow(u, w)});
            }
        }
        std::sort(raw.begin(), raw.end(), [](const JumpAtom& a, const JumpAtom& b) { return a.location < b.location; });
        FiniteAtoms out;
        for (const auto& a : raw) {
            if (!out.atoms.empty()) {
                auto& last = out.atoms.back();
                if (std::abs(a.location - last.location) <= 1e-12 * std::max(1.0, std::abs(a.location))) {
                    last.rate += a.rate;
                    continue;
                }
            }
            out.atoms.push_back(a);
        }
        return out;
    }
    // Density: Π has density e^{ωz}[λ(z) + λ(log(1 − e^z)) e^z / (1 − e^z)] for z < 0.
    const auto d = std::get<JumpDensity>(t->jumps);
    JumpDensity out = d;
    out.description = "tilted(" + d.description + ")";
    out.integrability = d.integrability - w;
    out.density = [d, w](double z) {
        double lam = (z >= d.support_lo && z <= d.support_hi && z != 0.0) ? d.density(z) : 0.0;
        if (z < 0.0) {
            const double ez = std::exp(z);
            const double y = std::log1p(-ez);
            if (y >= d.support_lo && y < 0.0) lam += d.density(y) * ez / (1.0 - ez);
        }
        return std::exp(w * z) * lam;
    };
    return out;
}

LevyTriplet build_spine_triplet(const CumulantModel& model) {
    const LevyTriplet* t = model.triplet();
    if (!t) throw DomainError("build_spine_triplet: requires a triplet-based model");
    if (!has_finite_atoms(*t))
        throw DomainError("build_spine_triplet: density jump measures are not supported; supply the spine triplet");
    auto pi = std::get<FiniteAtoms>(tilted_measure(model));
    double mean_jump = 0.0;
    for (const auto& a : pi.atoms) mean_jump += a.rate * a.location;
    LevyTriplet spine{model.kprime_at_omega_minus() - mean_jump, t->gaussian_var, std::move(pi)};
    verify_spine_triplet(model, spine);
    return spine;
}

double verify_spine_triplet(const CumulantModel& model, const LevyTriplet& spine, double tolerance) {
    const auto [lo, hi] = kappa_domain(model.source());
    (void)lo;
    const double q_max = std::min(2.0, 0.5 * (hi - model.omega_minus()));
    double worst = 0.0;
    for (double q : lin_space(0.0, q_max, 20)) {
        const double dev = std::abs(laplace_exponent(spine, q) - spine_exponent(model, q));
        worst = std::max(worst, dev);
    }
    if (!(worst < tolerance))
        throw ValidationFailure("spine triplet: |phi(q) - kappa(omega_- + q)| = " + format_double(worst) +
                                " exceeds " + format_double(tolerance));
    return worst;
}

void validate_model(const CumulantModel& model) {
    if (!(model.alpha() < 0.0)) throw ValidationFailure("model: alpha must be < 0");
    if (const LevyTriplet* t = model.triplet()) {
        validate_triplet(*t);
        if (drift_sign(*t) != DriftSign::negative)
            throw ValidationFailure("model: xi must drift to -infinity so that cells are absorbed at 0");
    }
    if (!(model.kprime_at_omega_minus() < 0.0)) throw ValidationFailure("model: Cramér hypothesis needs kappa'(omega_-) < 0");
    if (!(model.omega_minus() > 0.0) || !(model.omega_plus() > model.omega_minus()))
        throw ValidationFailure("model: need 0 < omega_- < omega_+");
}

const char* to_string(Regime regime) {
    switch (regime) {
        case Regime::AbsolutelyContinuous: return "AbsolutelyContinuous";
        case Regime::Singular: return "Singular";
        case Regime::SingularDimKnown: return "SingularDimKnown";
    }
    return "unknown";
}

RegimeClassification regime_classify(double alpha, double omega_minus, double omega_plus) {
    if (!(alpha < 0.0) || !(omega_minus > 0.0) || !(omega_plus > omega_minus))
        throw DomainError("regime_classify: need alpha < 0 < omega_- < omega_+");
    RegimeClassification c;
    c.lower_bound_literal_reading = alpha <= omega_minus;
    c.lower_bound_corrected_reading = alpha <= -omega_minus;
    if (alpha > -omega_minus) {
        c.regime = Regime::AbsolutelyContinuous;
        return c;
    }
    const double dim = omega_minus / (-alpha);
    c.dimension_lower_bound = dim;
    if (alpha > -omega_plus) {
        c.regime = Regime::SingularDimKnown;
        c.predicted_dimension = dim;
    } else {
        c.regime = Regime::Singular;
    }
    return c;
}

RegimeClassification regime_classify(const CumulantModel& model) {
    return regime_classify(model.alpha(), model.omega_minus(), model.omega_plus());
}

}  // namespace gfrag

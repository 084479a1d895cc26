#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>

#include "gfrag/levy.hpp"

namespace gfrag {

/// Cumulant built from a Lévy triplet and a self-similarity index α < 0:
///   κ(q) = ψ(q) + ∫_{(−∞,0)} (1 − e^y)^q Λ(dy).
struct TripletSource {
    LevyTriplet triplet;
    double alpha = -0.5;
};

/// Closed-form Boltzmann family, θ ∈ (1, 3/2], α = 1 − θ:
///   κ_θ(q) = cos(π(q−θ)) / sin(π(q−2θ)) · Γ(q−θ) / Γ(q−2θ),  q ∈ (θ, 2θ+1).
struct BoltzmannSource {
    double theta = 1.5;
};

using CumulantSource = std::variant<TripletSource, BoltzmannSource>;

struct RootSearchOptions {
    double q_lo = 1e-3;                ///< scan start for triplets (θ + q_lo for the family)
    std::optional<double> q_hi;        ///< scan end; default p, or finite_atoms_q_max, or 2θ+1−q_lo
    double finite_atoms_q_max = 20.0;  ///< scan end for finite-atom triplets (ψ finite everywhere)
    std::size_t grid_points = 400;
    double root_tolerance = 1e-12;
    double flat_tolerance = 1e-10;
};

struct Roots {
    double omega_minus = 0.0;
    double omega_plus = 0.0;  ///< +∞ when κ stays negative up to the scan end
    double kprime_at_omega_minus = 0.0;
};

/// Open domain (lo, hi) of κ for a source.
std::pair<double, double> kappa_domain(const CumulantSource& source);

double kappa(const CumulantSource& source, double q);
double kappa_prime(const CumulantSource& source, double q);

/// κ_θ via the reflection Γ(x) sin(πx) = π / Γ(1−x):
///   κ_θ(q) = cos(π(q−θ)) Γ(q−θ) Γ(1+2θ−q) / π,
/// which is analytic on (θ, 2θ+1). Throws DomainError within 1e-8 of the
/// Gamma poles at the domain edges.
double kappa_theta(double theta, double q);
double kappa_theta_prime(double theta, double q);

/// ω₋ = smallest root, ω₊ = upper sign change (or +∞). Sign-change scan
/// then bisection to machine precision. Throws NoNegativeRegion when κ > 0
/// on the whole scan and FlatRoot when |κ'(ω₋)| is below flat_tolerance.
Roots find_roots(const CumulantSource& source, const RootSearchOptions& options = {});

/// A cumulant with its cached roots. Immutable.
class CumulantModel {
public:
    static CumulantModel from_triplet(LevyTriplet triplet, double alpha, const RootSearchOptions& options = {});
    static CumulantModel boltzmann(double theta, const RootSearchOptions& options = {});

    const CumulantSource& source() const noexcept { return source_; }
    double alpha() const noexcept;
    double omega_minus() const noexcept { return roots_.omega_minus; }
    double omega_plus() const noexcept { return roots_.omega_plus; }
    bool omega_plus_finite() const noexcept;
    double kprime_at_omega_minus() const noexcept { return roots_.kprime_at_omega_minus; }
    double root_tolerance() const noexcept { return options_.root_tolerance; }
    const Roots& roots() const noexcept { return roots_; }

    /// Null for the Boltzmann family.
    const LevyTriplet* triplet() const noexcept;
    std::optional<double> theta() const noexcept;

    /// ακ'(ω₋) = Ê₁(1/I) > 0.
    double inverse_moment() const noexcept { return alpha() * roots_.kprime_at_omega_minus; }

private:
    CumulantModel(CumulantSource source, Roots roots, RootSearchOptions options)
        : source_(std::move(source)), roots_(roots), options_(options) {}

    CumulantSource source_;
    Roots roots_;
    RootSearchOptions options_;
};

double kappa(const CumulantModel& model, double q);
double kappa_prime(const CumulantModel& model, double q);

/// φ(q) = κ(ω₋ + q): Laplace exponent of the spine process η.
double spine_exponent(const CumulantModel& model, double q);

/// Π(dy) = e^{ω₋ y}(Λ + Λ̃)(dy), Λ̃ = push-forward of Λ|_{y<0} by y ↦ log(1 − e^y).
/// Coincident atom locations (relative gap ≤ 1e-12) are merged.
JumpMeasure tilted_measure(const CumulantModel& model);

/// Triplet (b_η, σ², Π) of η with b_η = κ'(ω₋) − Σ mass·location, checked by
/// verify_spine_triplet. Finite-atom models only.
LevyTriplet build_spine_triplet(const CumulantModel& model);

/// Throws ValidationFailure unless max over a 20-point q-grid of
/// |ψ_η(q) − κ(ω₋+q)| is below `tolerance`. Returns the max deviation.
double verify_spine_triplet(const CumulantModel& model, const LevyTriplet& spine, double tolerance = 1e-8);

/// Model-level checks on top of validate_triplet: α < 0, ξ drifts to −∞,
/// Cramér hypothesis (via the cached roots).
void validate_model(const CumulantModel& model);

enum class Regime { AbsolutelyContinuous, Singular, SingularDimKnown };

const char* to_string(Regime regime);

struct RegimeClassification {
    Regime regime = Regime::AbsolutelyContinuous;
    std::optional<double> predicted_dimension;   ///< ω₋/(−α) when −ω₊ < α ≤ −ω₋
    std::optional<double> dimension_lower_bound; ///< ω₋/(−α) whenever α ≤ −ω₋
    /// The lower bound is stated in the source for "α ≤ ω₋"; both the literal
    /// reading and the sign-corrected reading α ≤ −ω₋ are reported.
    bool lower_bound_literal_reading = false;
    bool lower_bound_corrected_reading = false;
};

RegimeClassification regime_classify(double alpha, double omega_minus, double omega_plus);
RegimeClassification regime_classify(const CumulantModel& model);

}  // namespace gfrag

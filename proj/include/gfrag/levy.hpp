#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "gfrag/random.hpp"

namespace gfrag {

struct JumpAtom {
    double location = 0.0;  ///< jump size y != 0, in log-size units
    double rate = 0.0;      ///< intensity per unit of process time
};

/// Finite-activity jump measure: a finite list of atoms.
struct FiniteAtoms {
    std::vector<JumpAtom> atoms;
};

/// Jump measure with a density λ(y) supported on [support_lo, support_hi]
/// (support_lo < 0 <= support_hi). Possibly of infinite activity at 0.
struct JumpDensity {
    std::function<double(double)> density;
    double integrability = 1.0;         ///< declared p: ∫_1^∞ e^{py} λ(y) dy < ∞
    double small_jump_threshold = 1e-3; ///< δ: jumps with |y| < δ are replaced by a Gaussian
    double support_lo = -30.0;
    double support_hi = 0.0;
    std::string description;
};

using JumpMeasure = std::variant<FiniteAtoms, JumpDensity>;

/// Characteristics (b, σ², Λ) of a Lévy process ξ.
///
/// Compensation convention: FiniteAtoms use the uncompensated exponent
///   ψ(q) = b q + σ² q²/2 + Σ λ_i (e^{q y_i} − 1),
/// while JumpDensity uses the truncation-compensated exponent
///   ψ(q) = b q + σ² q²/2 + ∫ (e^{qy} − 1 − q y 1{|y|<1}) λ(y) dy.
struct LevyTriplet {
    double drift = 0.0;
    double gaussian_var = 0.0;
    JumpMeasure jumps = FiniteAtoms{};
};

/// b = −3, σ² = 2, one atom at −ln 2 with rate 1. Its cumulant
/// κ(q) = −3q + q² + 2^{1−q} − 1 is available in closed form.
LevyTriplet reference_dyadic_triplet();

bool has_finite_atoms(const LevyTriplet& triplet);

/// ψ(q) = log E exp(q ξ(1)). Throws DomainError beyond the declared
/// integrability exponent and QuadratureError on non-convergence.
double laplace_exponent(const LevyTriplet& triplet, double q);

/// ψ'(q).
double laplace_exponent_derivative(const LevyTriplet& triplet, double q);

/// Total rate Λ((−∞, 0)); +∞ for infinite negative activity.
double negative_jump_mass(const LevyTriplet& triplet);

enum class DriftSign { negative, zero, positive };

/// Sign of ψ'(0+) = E ξ(1). `negative` certifies ξ → −∞.
DriftSign drift_sign(const LevyTriplet& triplet);

const char* to_string(DriftSign sign);

/// Structural checks: σ² ≥ 0, positive negative-jump mass, not the negative
/// of a subordinator, valid density declaration. Throws ValidationFailure.
void validate_triplet(const LevyTriplet& triplet);

struct JumpMark {
    std::size_t index = 0;  ///< index of the post-jump node in PathGrid
    double size = 0.0;      ///< values[index] − values[index − 1], exactly
};

/// A sampled path of ξ (or η). Jump epochs appear twice: the left limit,
/// then the post-jump value, at the same time.
struct PathGrid {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<JumpMark> jump_marks;
};

/// One node of a streamed path.
struct PathStep {
    double time = 0.0;
    double left = 0.0;   ///< left limit at `time`
    double value = 0.0;  ///< value at `time` (after any jump)
    bool jump = false;
};

/// Precomputed simulation plan for a triplet: jump tables, effective
/// drift and Gaussian variance (including small-jump compensation).
class PathSimulator {
public:
    PathSimulator(const LevyTriplet& triplet, double max_step);

    double max_step() const noexcept { return max_step_; }
    double jump_rate() const noexcept { return jump_rate_; }
    double effective_drift() const noexcept { return drift_; }
    double effective_variance() const noexcept { return variance_; }

    class Stream;

    /// Unbounded stream of nodes on the mesh k·h plus exact jump epochs.
    /// Streams with the same seed produce identical prefixes.
    Stream stream(std::uint64_t seed, double mesh) const;
    Stream stream(std::uint64_t seed) const;

private:
    double sample_jump(Engine& engine) const;

    double max_step_;
    double drift_ = 0.0;
    double variance_ = 0.0;
    double jump_rate_ = 0.0;
    // Jump table: cell i has bounds [jump_lo_[i], jump_hi_[i]] (equal for
    // atoms) and cumulative probability jump_cdf_[i].
    std::vector<double> jump_lo_;
    std::vector<double> jump_hi_;
    std::vector<double> jump_cdf_;
};

class PathSimulator::Stream {
public:
    PathStep next();
    double time() const noexcept { return time_; }
    double value() const noexcept { return value_; }
    /// Number of mesh nodes emitted so far.
    std::uint64_t mesh_index() const noexcept { return mesh_index_; }

private:
    friend class PathSimulator;
    Stream(const PathSimulator& sim, std::uint64_t seed, double mesh);

    const PathSimulator* sim_;
    Engine gauss_engine_;
    Engine jump_engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::exponential_distribution<double> waiting_{1.0};
    double mesh_;
    std::uint64_t mesh_index_ = 0;
    double next_jump_ = 0.0;
    double time_ = 0.0;
    double value_ = 0.0;
};

/// Jump-adapted path of ξ on [0, horizon]: exact jump epochs plus a
/// regular mesh of step ≤ max_step that ends exactly at the horizon.
PathGrid sample_path(const LevyTriplet& triplet, double horizon, double max_step, std::uint64_t seed);

}  // namespace gfrag

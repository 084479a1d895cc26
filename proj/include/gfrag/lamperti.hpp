#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gfrag/cumulant.hpp"
#include "gfrag/levy.hpp"

namespace gfrag {

/// ∫₀^{Δs} e^{−α(v + Δv·u/Δs)} du for ξ linear on a segment, in closed form.
double clock_increment(double dt, double v0, double v1, double alpha);

/// The Lamperti clock C(s) = ∫₀^s e^{−αξ(u)} du of a sampled path, with ξ
/// treated as linear between nodes.
class LampertiClock {
public:
    LampertiClock(const PathGrid& path, double alpha);

    /// C at node i.
    double at(std::size_t i) const { return cumulative_[i]; }
    double total() const noexcept { return cumulative_.back(); }
    /// C(s) for s within the path.
    double operator()(double s) const;
    /// τ(t) = inf{s : C(s) ≥ t}, for 0 ≤ t ≤ total().
    double inverse(double t) const;
    /// Node index i with C(at(i)) ≤ t < C(at(i+1)) (last node if t ≥ total()).
    std::size_t segment(double t) const;

private:
    const PathGrid* path_;
    double alpha_;
    std::vector<double> cumulative_;
};

struct PssmpNode {
    double t = 0.0;       ///< real time
    double x = 0.0;       ///< size at t
    double x_left = 0.0;  ///< left limit at t (differs from x at jumps)
};

/// A positive self-similar Markov path X(t) = x₀ exp ξ(τ(t x₀^α)).
struct PssmpPath {
    std::vector<PssmpNode> nodes;           ///< strictly increasing t
    std::optional<double> absorption_time;  ///< unset: not yet absorbed
    double alpha = 0.0;
    double origin = 1.0;
};

struct AbsorptionOptions {
    /// Integration stops once e^{−αξ} < stop_cutoff · (accumulated + 1).
    double stop_cutoff = 1e-10;
    /// ... and the path has run at least this long (process time).
    double min_horizon = 0.0;
};

/// Lamperti transform of a ξ path from x0. With `horizon` the output ends at
/// real time `horizon` (unless absorbed earlier); without it the path runs
/// until the absorption rule fires. Throws PathTooShort otherwise.
PssmpPath lamperti_transform(const PathGrid& xi, double alpha, double x0, std::optional<double> horizon = std::nullopt,
                             const AbsorptionOptions& options = {});

/// I = ∫₀^∞ e^{−αη}, truncated by the stop rule. Throws PathTooShort.
double absorption_time(const PathGrid& eta, double alpha, const AbsorptionOptions& options = {});

struct ExpFunctionalOptions {
    double max_step = 0.01;
    AbsorptionOptions absorption{};
    double initial_horizon = 64.0;  ///< η-time; doubled on demand
    int max_doublings = 12;
};

struct ExpFunctionalSamples {
    std::vector<double> values;
    std::string model_tag;
    std::size_t count() const noexcept { return values.size(); }
};

/// One draw of I from an η stream (prefix-stable in the seed).
double sample_exp_functional_one(const PathSimulator& eta, double alpha, std::uint64_t seed,
                                 const ExpFunctionalOptions& options = {});

/// n independent draws of I; sample i uses derive_seed(seed, {stream::spine, i}). Runs on
/// `threads` workers; the result does not depend on the thread count.
ExpFunctionalSamples sample_exp_functional(const LevyTriplet& spine, double alpha, std::size_t n, std::uint64_t seed,
                                           const ExpFunctionalOptions& options = {}, unsigned threads = 1);

struct DensityEstimate {
    std::vector<double> grid;    ///< log-spaced evaluation points
    std::vector<double> values;  ///< k̂ ≥ 0
    double bandwidth = 0.0;      ///< on the log scale
};

/// Gaussian kernel estimate of the density of I on the log scale (Silverman
/// bandwidth by default), mapped back to x. The grid starts at least a decade
/// below the smallest sample. Needs ≥ 1000 samples with spread.
DensityEstimate estimate_density_k(const ExpFunctionalSamples& samples, std::optional<double> log_bandwidth = std::nullopt,
                                   std::size_t grid_points = 512);

/// Trapezoid integral of k̂ over its grid.
double density_mass(const DensityEstimate& estimate);

inline constexpr std::size_t kLowPowerThreshold = 1000;

struct InverseMomentReport {
    double estimate = 0.0;
    double std_error = 0.0;
    double reference = 0.0;  ///< ακ'(ω₋)
    double z_score = 0.0;
    std::size_t n = 0;
    bool low_power = false;
    bool pass = false;  ///< |z| < 3 and not low power
};

InverseMomentReport inverse_moment_check(const ExpFunctionalSamples& samples, const CumulantModel& model);

}  // namespace gfrag

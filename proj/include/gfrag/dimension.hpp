#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfrag/area.hpp"
#include "gfrag/cumulant.hpp"

namespace gfrag {

/// Weighted leaf lifetimes. Points carry a group id (one group per
/// simulated system); pair statistics only combine points of the same group
/// and average the groups with equal weight.
class LeafSample {
public:
    LeafSample() = default;
    LeafSample(std::vector<double> lifetimes, std::vector<double> weights);

    /// Adds the atoms of a profile as one group.
    void add_profile(const AreaProfile& profile);
    void add_group(std::span<const double> lifetimes, std::span<const double> weights);

    /// Rescales the weights so that every group sums to 1/groups().
    void normalize();
    bool normalized() const noexcept { return normalized_; }

    std::size_t size() const noexcept { return lifetimes_.size(); }
    std::size_t groups() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::span<const double> lifetimes() const noexcept { return lifetimes_; }
    std::span<const double> weights() const noexcept { return weights_; }
    /// Points of group g occupy [group_begin(g), group_begin(g+1)), sorted by lifetime.
    std::size_t group_begin(std::size_t g) const { return offsets_.at(g); }

    /// Keeps each point with probability 1/2 (at least two per group).
    LeafSample half(std::uint64_t seed) const;

private:
    std::vector<double> lifetimes_;
    std::vector<double> weights_;
    std::vector<std::size_t> offsets_{0};
    bool normalized_ = false;
};

inline constexpr double kGapClamp = 1e-12;
inline constexpr std::size_t kMinEnergyPoints = 100;
inline constexpr std::size_t kMinDimensionPoints = 1000;

struct EnergyValue {
    double value = 0.0;
    std::size_t clamped_pairs = 0;
};

/// Σ_{i≠j} w̃ᵢw̃ⱼ / max(|ζᵢ−ζⱼ|, clamp)^b per group (w̃ = group-normalised
/// weights), averaged over groups. Needs b ∈ (0, 1] and min_points points.
EnergyValue b_energy(const LeafSample& sample, double b, double clamp = kGapClamp,
                     std::size_t min_points = kMinEnergyPoints);

struct EnergyRow {
    double b = 0.0;
    double full = 0.0;        ///< Î_b on the whole sample
    double half = 0.0;        ///< Î_b on a random half
    double relative_change = 0.0;
    bool stable = false;      ///< |full/half − 1| < tolerance
    std::size_t clamped_pairs = 0;
};

struct EnergyReport {
    std::vector<EnergyRow> rows;
    double tolerance = 0.25;
};

EnergyReport energy_report(const LeafSample& sample, std::span<const double> b_grid, std::uint64_t seed,
                           double tolerance = 0.25);

struct CorrelationCurve {
    std::vector<double> r;
    std::vector<double> c;  ///< Ĉ(r), nondecreasing
};

/// Ĉ(r) = Σ_{i≠j} w̃ᵢw̃ⱼ 1{|ζᵢ−ζⱼ| < r}, group-averaged.
CorrelationCurve correlation_integral(const LeafSample& sample, std::span<const double> r_grid);

struct DimensionEstimate {
    double slope = 0.0;      ///< clamped to [0, 1]
    double raw_slope = 0.0;
    double std_error = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::size_t points = 0;
    std::optional<double> reference;  ///< ω₋/(−α) when the regime predicts it
    CorrelationCurve curve;
};

/// Log–log slope of Ĉ over [window_lo, window_hi] (default: the middle decade
/// of the grid). Needs ≥ 1000 points and a grid spanning ≥ 2 decades.
DimensionEstimate correlation_dimension(const LeafSample& sample, std::span<const double> r_grid,
                                        std::optional<std::pair<double, double>> window = std::nullopt);

/// Same, with the theoretical value attached when the model is in the
/// SingularDimKnown regime.
DimensionEstimate correlation_dimension(const LeafSample& sample, std::span<const double> r_grid,
                                        const CumulantModel& model,
                                        std::optional<std::pair<double, double>> window = std::nullopt);

/// Differences ζ_σ − ζ_σ' of two leaves tagged independently in the same system.
struct LeafPairs {
    std::vector<double> differences;
    std::vector<double> weights;  ///< ℳ̂² per pair: weighted averages follow the square-biased law
};

LeafPairs tagged_leaf_pairs(const CumulantModel& model, const TruncationPolicy& policy,
                            const ResidualLifetimeBank& bank, std::size_t n_systems, std::size_t pairs_per_system,
                            std::uint64_t seed, unsigned threads = 1);

struct FourierRow {
    double theta = 0.0;
    double re = 0.0;
    double im = 0.0;
    double re_se = 0.0;
    double im_se = 0.0;
};

struct FourierTable {
    std::vector<FourierRow> rows;
    double at_zero = 1.0;
    double tail = 0.0;  ///< re at the largest θ
};

/// Weighted empirical characteristic function of the differences.
FourierTable fourier_pair_diagnostic(const LeafPairs& pairs, std::span<const double> theta_grid);

struct RegimeEvidence {
    std::optional<ProfileEstimate> profile;
    std::optional<DimensionEstimate> dimension;
    std::optional<EnergyReport> energy;
    std::optional<FourierTable> fourier;
    /// |d log N / d log ε| over the lowest decade below which N counts as stabilised.
    double n_stable_slope = 0.02;
};

/// Prediction from the cumulant next to the empirical evidence.
nlohmann::json regime_report(const CumulantModel& model, const RegimeEvidence& evidence);

}  // namespace gfrag

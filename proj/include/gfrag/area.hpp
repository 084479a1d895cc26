#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gfrag/cellsystem.hpp"
#include "gfrag/cumulant.hpp"
#include "gfrag/lamperti.hpp"

namespace gfrag {

/// Where a terminal lineage puts its area atom. Freeze: at the height where
/// the simulation stopped. SpineExtend: that height plus x^{−α}·I* with I*
/// an independent copy of the exponential functional of the spine.
enum class AreaMode { Freeze, SpineExtend };

const char* to_string(AreaMode mode);

inline constexpr std::size_t kDefaultBankSize = std::size_t{1} << 15;

/// Pre-drawn samples of I used as residual lifetimes. Draws pick a uniform
/// index from a per-draw seed, so results depend only on (bank, seed).
class ResidualLifetimeBank {
public:
    ResidualLifetimeBank() = default;
    ResidualLifetimeBank(std::vector<double> samples, double alpha);

    /// n draws of I for the spine of `model` (finite-atom triplets only).
    static ResidualLifetimeBank build(const CumulantModel& model, std::size_t n, std::uint64_t seed,
                                      const ExpFunctionalOptions& options = {}, unsigned threads = 1);

    double draw(std::uint64_t seed) const;
    bool empty() const noexcept { return samples_.empty(); }
    std::size_t size() const noexcept { return samples_.size(); }
    double alpha() const noexcept { return alpha_; }
    const std::vector<double>& samples() const noexcept { return samples_; }

private:
    std::vector<double> samples_;
    double alpha_ = 0.0;
};

struct AreaAtom {
    double location = 0.0;  ///< leaf height
    double mass = 0.0;      ///< x^{ω₋}
    double start = 0.0;     ///< height at which the lineage's simulation stopped
    double size = 0.0;      ///< x: size of the unexplored remainder
    std::size_t record = 0; ///< owning cell
};

/// A(t) = Σ_{location ≤ t} mass.
class AreaProfile {
public:
    AreaProfile() = default;
    AreaProfile(std::vector<AreaAtom> atoms, AreaMode mode);

    const std::vector<AreaAtom>& atoms() const noexcept { return atoms_; }
    AreaMode mode() const noexcept { return mode_; }
    double total_mass() const noexcept { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
    double operator()(double t) const;
    std::vector<double> evaluate(std::span<const double> t_grid) const;
    /// Smallest location with A(location) ≥ q·total_mass().
    double location_quantile(double q) const;

private:
    std::vector<AreaAtom> atoms_;  // sorted by location
    std::vector<double> cumulative_;
    AreaMode mode_ = AreaMode::Freeze;
};

/// One atom per terminal lineage: every frozen cell (mass χ^{ω₋} at its
/// birth) and every expanded cell (mass r^{ω₋} at its death height, r the
/// size at which its path was stopped). SpineExtend needs a bank.
AreaProfile area_profile(const CellSystem& system, AreaMode mode, std::uint64_t seed,
                         const ResidualLifetimeBank* bank = nullptr);

/// M(t,ε) = Σ Xᵢ^{ω₋}1{Xᵢ ≤ ε} and N(t,ε) = Σ 1{Xᵢ > ε}, stored row-major
/// (t index major). Sums of several systems can be pooled with +=.
struct FragmentStats {
    std::vector<double> t_grid;
    std::vector<double> eps_grid;
    std::vector<double> m;
    std::vector<double> n;
    std::vector<double> power_sum;      ///< Σ Xᵢ^{ω₋} per t
    std::vector<double> log_largest_sum;///< Σ over systems of ln(max Xᵢ) per t (systems with fragments)
    std::vector<std::size_t> nonempty;  ///< systems with at least one fragment, per t
    std::size_t systems = 0;
    double omega_minus = 0.0;
    double size_floor = 0.0;

    double m_at(std::size_t ti, std::size_t ei) const { return m[ti * eps_grid.size() + ei]; }
    double n_at(std::size_t ti, std::size_t ei) const { return n[ti * eps_grid.size() + ei]; }
    /// Geometric mean over systems of the largest fragment at t (0 if none).
    double typical_largest(std::size_t ti) const;

    FragmentStats& operator+=(const FragmentStats& other);
};

/// Statistics of fragments_at(system, t). When `pending` is given, atoms with
/// start ≤ t < location count as fragments of their frozen size.
FragmentStats fragment_stats(const CellSystem& system, std::span<const double> t_grid,
                             std::span<const double> eps_grid, const AreaProfile* pending = nullptr);

struct ProfileEstimateOptions {
    double lower_factor = 10.0;  ///< window starts at lower_factor·ε_cut
    double upper_factor = 10.0;  ///< window ends at typical largest / upper_factor
    /// Only t in [interior_lo, interior_hi] are estimated.
    double interior_lo = 0.0;
    double interior_hi = std::numeric_limits<double>::infinity();
    std::size_t min_window_points = 3;
};

struct ProfilePoint {
    double t = 0.0;
    bool estimated = false;      ///< interior and enough window points
    std::size_t window_points = 0;
    double eps_lo = 0.0;
    double eps_hi = 0.0;
    double m_slope = 0.0;        ///< d log M / d log ε, ≈ −α in the AC regime
    double m_slope_se = 0.0;
    double n_slope = 0.0;        ///< d log N / d log ε, ≈ −(ω₋+α) in the AC regime
    double n_slope_se = 0.0;
    double n_low_slope = 0.0;    ///< same over the lowest decade of the window
    double a_from_m = 0.0;       ///< ακ'(ω₋)·ε^α·M, geometric mean over the window
    /// (ω₋+α)|κ'(ω₋)|·lim ε^{ω₋+α}N, from the fit N = A·ε^{−(ω₋+α)} + B over the window.
    double a_from_n = 0.0;
    double n_offset = 0.0;       ///< B
    double a_from_n_raw = 0.0;   ///< (ω₋+α)|κ'(ω₋)|·ε^{ω₋+α}·N, geometric mean over the window
    /// (ω₋+α)ε^{ω₋}N / (−α M) at the smallest window ε.
    double small_eps_ratio = 0.0;
};

struct ProfileEstimate {
    RegimeClassification regime;
    bool converges = false;  ///< AC regime: both estimators have a limit
    std::vector<ProfilePoint> points;
};

/// Per-t log–log fits of M and N over the window [lower·ε_cut, typical/upper].
/// Statistics divided by the number of pooled systems give per-system means.
ProfileEstimate profile_estimate(const FragmentStats& stats, const CumulantModel& model,
                                 const ProfileEstimateOptions& options = {});

/// Mass-weighted [lo, hi] quantiles of atom locations over several profiles.
std::pair<double, double> interior_range(std::span<const AreaProfile> profiles, double lo = 0.1, double hi = 0.9);

struct TaggedLeaf {
    std::size_t root = 0;
    std::vector<std::uint32_t> path;      ///< child choices below the root
    std::vector<std::size_t> records;     ///< visited cells, root first
    std::vector<double> segments;         ///< time spent in each visited cell before moving on
    double residual = 0.0;                ///< location of the atom minus the terminal cell's birth
    double lifetime = 0.0;                ///< ζ_σ
    std::size_t atom = 0;                 ///< index into profile.atoms()
    std::vector<PathCheckpoint> trajectory;  ///< (time, size) along the descent
};

/// Descends the genealogy choosing, at each cell, its own atom or a child
/// subtree with probability proportional to area mass.
class LeafTagger {
public:
    LeafTagger(const CellSystem& system, const AreaProfile& profile);
    TaggedLeaf tag(std::uint64_t seed) const;
    double subtree_mass(std::size_t record) const { return subtree_[record]; }

private:
    const CellSystem* system_;
    const AreaProfile* profile_;
    std::vector<double> subtree_;
    std::vector<std::size_t> own_atom_;
};

TaggedLeaf tag_leaf(const CellSystem& system, const AreaProfile& profile, std::uint64_t seed);

/// n leaf lifetimes under the area-biased law: systems from a pool of
/// pool_factor·n are resampled with probability ∝ total mass, then one leaf
/// is tagged in each draw.
std::vector<double> size_biased_tagged_lifetimes(const CumulantModel& model, const TruncationPolicy& policy,
                                                 const ResidualLifetimeBank& bank, std::size_t n,
                                                 std::uint64_t seed, std::size_t pool_factor = 5,
                                                 unsigned threads = 1);

struct BranchingIdentityReport {
    double t = 0.0;
    double s = 0.0;
    std::vector<double> direct;    ///< A(t+s) − A(t)
    std::vector<double> composed;  ///< Σ Xᵢ(t)^{ω₋} Aᵢ(s Xᵢ(t)^α) + atoms pending at t that land in (t, t+s]
    double ks_distance = 0.0;
    double threshold = 0.08;
    bool pass = false;
};

BranchingIdentityReport branching_identity_check(const CumulantModel& model, const TruncationPolicy& policy,
                                                 const ResidualLifetimeBank& bank, double t, double s,
                                                 std::size_t n_rep, std::uint64_t seed, unsigned threads = 1);

struct SmallTimeRow {
    double eps = 0.0;
    double mean_area = 0.0;
    double std_error = 0.0;
    double ratio = 0.0;  ///< mean_area / eps
};

struct SmallTimeReport {
    std::vector<SmallTimeRow> rows;  ///< ε decreasing
    std::size_t n_rep = 0;
    bool strictly_decreasing = false;  ///< ratio strictly decreases as ε decreases
    bool low_power = false;
    bool pass = false;
};

SmallTimeReport small_time_check(const CumulantModel& model, const TruncationPolicy& policy,
                                 const ResidualLifetimeBank& bank, std::span<const double> eps_grid,
                                 std::size_t n_rep, std::uint64_t seed, AreaMode mode = AreaMode::SpineExtend,
                                 unsigned threads = 1);

/// Seed of replica r in experiment stream k.
std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t k, std::size_t r);

}  // namespace gfrag

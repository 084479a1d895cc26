#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gfrag/cumulant.hpp"
#include "gfrag/lamperti.hpp"

namespace gfrag {

/// Ulam–Harris label: the Eve cell is empty, child j of u is u·j (j ≥ 1,
/// counted in chronological order of the parent's negative jumps).
struct UlamLabel {
    std::vector<std::uint32_t> path;

    std::size_t generation() const noexcept { return path.size(); }
    UlamLabel child(std::uint32_t j) const;
    /// "0" for the Eve cell, otherwise "j1.j2...".
    std::string to_string() const;
    auto operator<=>(const UlamLabel&) const = default;
};

enum class CellStatus { Absorbed, TruncatedSize, TruncatedGeneration, TruncatedTime, TruncatedBudget };

inline constexpr std::size_t kCellStatusCount = 5;

const char* to_string(CellStatus status);

inline constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

struct TruncationPolicy {
    double size_floor = 1e-4;                                        ///< ε_cut
    std::size_t generation_cap = 30;                                 ///< G
    double time_horizon = std::numeric_limits<double>::infinity();  ///< T
    std::size_t cell_budget = 10'000'000;                            ///< N_max expanded cells
    double path_step = 0.01;                                         ///< ξ mesh (process time)
    std::size_t checkpoint_stride = 1;                               ///< keep every k-th mesh node
    AbsorptionOptions absorption{};
    double max_process_time = 1e5;  ///< safety cap on one cell's ξ-time
    /// Physical times at which every cell records its exact size, whatever
    /// the checkpoint stride. Sorted ascending.
    std::vector<double> snapshot_times;

    /// Throws DomainError unless every field is in range.
    void validate() const;
};

/// Size of a cell at a given age (normalised units, see CellRecord).
struct PathCheckpoint {
    double age = 0.0;
    double size = 0.0;
};

struct Snapshot {
    std::size_t time_index = 0;  ///< into TruncationPolicy::snapshot_times
    double size = 0.0;           ///< normalised
};

struct ChildBirth {
    double age = 0.0;   ///< parent age at the jump (normalised)
    double size = 0.0;  ///< |ΔX| = parent left limit − parent post-jump size (normalised)
    std::size_t index = kNoParent;  ///< record index, once placed in a system
};

/// One cell. Quantities ending in `_rel` are normalised by the root: sizes
/// are divided by the root size x and times by x^{−α}. The physical values
/// are x·size_rel and x^{−α}·time_rel, so systems that differ only by the
/// root size share every normalised number bit for bit.
struct CellRecord {
    UlamLabel label;
    std::size_t root = 0;
    std::size_t parent = kNoParent;
    std::uint64_t seed = 0;

    double birth_time = 0.0;    ///< b_u
    double initial_size = 0.0;  ///< χ_u(0)
    double death_age = 0.0;     ///< ζ_u: age at which the simulation of the cell stopped (0 if frozen)

    double birth_time_rel = 0.0;
    double size_rel = 0.0;
    double death_age_rel = 0.0;
    /// Size at which the cell's own path was stopped; equals size_rel for a frozen cell.
    double residual_size_rel = 0.0;

    CellStatus status = CellStatus::Absorbed;
    bool expanded = false;
    std::vector<ChildBirth> children;
    std::vector<PathCheckpoint> checkpoints;  ///< normalised (age, size), includes both sides of every jump
    std::vector<Snapshot> snapshots;          ///< alive at the listed snapshot times

    std::size_t generation() const noexcept { return label.generation(); }
};

struct SystemStats {
    std::array<std::size_t, kCellStatusCount> status_counts{};
    std::size_t records = 0;
    std::size_t expanded = 0;
    std::size_t max_generation = 0;
    bool budget_exhausted = false;  ///< system incomplete
    std::size_t frozen_below_floor = 0;  ///< frozen subtrees that fragments_at cannot see
};

class CellSystem {
public:
    const std::vector<CellRecord>& records() const noexcept { return records_; }
    const CellRecord& operator[](std::size_t i) const { return records_[i]; }
    std::size_t size() const noexcept { return records_.size(); }

    const TruncationPolicy& policy() const noexcept { return policy_; }
    std::uint64_t master_seed() const noexcept { return seed_; }
    const std::vector<double>& root_sizes() const noexcept { return roots_; }
    double alpha() const noexcept { return alpha_; }
    double omega_minus() const noexcept { return omega_minus_; }
    const SystemStats& stats() const noexcept { return stats_; }

    /// x_k and x_k^{−α} for root k.
    double size_scale(std::size_t root) const { return roots_.at(root); }
    double time_scale(std::size_t root) const { return time_scales_.at(root); }

    /// Record index of root k (roots come first).
    std::size_t root_record(std::size_t root) const { return root; }

    /// Text label; with several roots it is prefixed by "r<k>:".
    std::string label_text(std::size_t index) const;

private:
    friend CellSystem build_system(std::span<const double>, const CumulantModel&, const TruncationPolicy&,
                                   std::uint64_t, unsigned);
    std::vector<CellRecord> records_;
    TruncationPolicy policy_;
    std::uint64_t seed_ = 0;
    std::vector<double> roots_;
    std::vector<double> time_scales_;
    double alpha_ = 0.0;
    double omega_minus_ = 0.0;
    SystemStats stats_;
};

/// Simulates a single cell from x0 (root of its own system, label ∅). The
/// path runs until the size falls below `policy.size_floor` or the clock
/// tail becomes negligible; every negative jump is recorded as a child.
CellRecord simulate_cell(double x0, const CumulantModel& model, const TruncationPolicy& policy, std::uint64_t seed);
/// Same, from a bare triplet (no root or validity requirements on κ).
CellRecord simulate_cell(double x0, const LevyTriplet& triplet, double alpha, const TruncationPolicy& policy,
                         std::uint64_t seed);

/// Breadth-first expansion: a cell is expanded iff its initial size is at
/// least ε_cut, its generation is below G, its birth time is below T and the
/// budget allows. Every child gets a record (frozen ones are not expanded).
/// Each cell's stream is seeded from (master_seed, root, label) alone.
CellSystem build_system(std::span<const double> root_sizes, const CumulantModel& model, const TruncationPolicy& policy,
                        std::uint64_t master_seed, unsigned threads = 1);
CellSystem build_system(double root_size, const CumulantModel& model, const TruncationPolicy& policy,
                        std::uint64_t master_seed, unsigned threads = 1);

/// Per-cell seed used by build_system.
std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t root, const UlamLabel& label);

struct GenerationMultiset {
    std::size_t generation = 0;
    std::vector<double> log_sizes;  ///< sorted ascending
};

/// {ln χ_u(0) : |u| = n}, frozen cells included. Throws DomainError if n
/// exceeds the generation cap.
GenerationMultiset branching_walk(const CellSystem& system, std::size_t n);

/// ℳ(n) on the stopping line "generation n or earlier truncation":
/// Σ_{|u|=n} χ_u(0)^{ω₋} + Σ_{|u|<n, frozen} χ_u(0)^{ω₋} + Σ_{|u|<n, expanded} r_u^{ω₋},
/// where r_u is the size at which u's own path was stopped. Cells that are
/// frozen or stopped early stand in for their unexplored descendants, so the
/// Monte Carlo mean is 1 under any policy.
double intrinsic_martingale(const CellSystem& system, std::size_t n);

/// Sizes of the simulated cells alive at time t (b_u ≤ t < b_u + ζ_u), taken
/// at the last mesh node not after the cell's age, sorted nonincreasing.
/// Snapshot times are exact; other times use the stored checkpoints, which
/// are exact only with checkpoint_stride = 1.
std::vector<double> fragments_at(const CellSystem& system, double t);

/// One line per record: label, parent label ("-" for roots), birth time,
/// initial size, death age, status; tab-separated, shortest round-trip decimals.
std::string export_tree(const CellSystem& system);

}  // namespace gfrag

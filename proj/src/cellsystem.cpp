#include "gfrag/cellsystem.hpp"

#include "gfrag/error.hpp"
#include "gfrag/numeric.hpp"
#include "gfrag/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace gfrag {

namespace {

// Outcome of simulating one cell in normalised units.
struct CellTrace {
    double death_age = 0.0;
    double residual = 0.0;
    CellStatus status = CellStatus::Absorbed;
    std::vector<ChildBirth> children;
    std::vector<PathCheckpoint> checkpoints;
    std::vector<Snapshot> snapshots;
};

// c is the cell's initial size and eps the size floor, both normalised by the
// root; ages come out normalised by the root as well. `targets` are the
// snapshot times in the same units and `birth` the cell's birth time.
CellTrace trace_cell(const PathSimulator& sim, std::uint64_t seed, double c, double eps, double alpha,
                     const TruncationPolicy& policy, std::span<const double> targets = {}, double birth = 0.0) {
    CellTrace tr;
    std::size_t next_target = static_cast<std::size_t>(std::lower_bound(targets.begin(), targets.end(), birth) - targets.begin());
    double held_size = c;  // size on [previous node, current node)
    auto take_snapshots = [&](double age_end) {
        while (next_target < targets.size() && targets[next_target] - birth < age_end) {
            tr.snapshots.push_back(Snapshot{next_target, held_size});
            ++next_target;
        }
    };
    const double age_scale = std::pow(c, -alpha);
    auto stream = sim.stream(seed, policy.path_step);
    double clock = 0.0;
    double prev_time = 0.0;
    double prev_value = 0.0;
    std::size_t mesh_nodes = 0;
    tr.checkpoints.push_back(PathCheckpoint{0.0, c});
    for (;;) {
        const PathStep step = stream.next();
        clock += clock_increment(step.time - prev_time, prev_value, step.left, alpha);
        prev_time = step.time;
        prev_value = step.value;
        const double age = age_scale * clock;
        const double size = c * std::exp(step.value);
        take_snapshots(age);
        held_size = size;
        bool recorded = false;
        if (step.jump) {
            const double left = c * std::exp(step.left);
            tr.checkpoints.push_back(PathCheckpoint{age, left});
            tr.checkpoints.push_back(PathCheckpoint{age, size});
            recorded = true;
            if (step.value < step.left) tr.children.push_back(ChildBirth{age, left - size, kNoParent});
        } else if (++mesh_nodes % policy.checkpoint_stride == 0) {
            tr.checkpoints.push_back(PathCheckpoint{age, size});
            recorded = true;
        }
        const bool below_floor = size < eps;
        const bool tail_negligible = std::exp(-alpha * step.value) < policy.absorption.stop_cutoff * (clock + 1.0) &&
                                     step.time >= policy.absorption.min_horizon;
        if (below_floor || tail_negligible) {
            if (!recorded) tr.checkpoints.push_back(PathCheckpoint{age, size});
            tr.death_age = age;
            tr.residual = size;
            tr.status = below_floor ? CellStatus::TruncatedSize : CellStatus::Absorbed;
            return tr;
        }
        if (step.time > policy.max_process_time)
            throw PathTooShort("simulate_cell: cell neither absorbed nor below the size floor within the process-time cap");
    }
}

const LevyTriplet& require_triplet(const CumulantModel& model) {
    const LevyTriplet* t = model.triplet();
    if (!t) throw DomainError("cell system: the model must be built from a Lévy triplet");
    return *t;
}

}  // namespace

UlamLabel UlamLabel::child(std::uint32_t j) const {
    UlamLabel c{path};
    c.path.push_back(j);
    return c;
}

std::string UlamLabel::to_string() const {
    if (path.empty()) return "0";
    std::string s;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) s += '.';
        s += std::to_string(path[i]);
    }
    return s;
}

const char* to_string(CellStatus status) {
    switch (status) {
        case CellStatus::Absorbed: return "Absorbed";
        case CellStatus::TruncatedSize: return "TruncatedSize";
        case CellStatus::TruncatedGeneration: return "TruncatedGeneration";
        case CellStatus::TruncatedTime: return "TruncatedTime";
        case CellStatus::TruncatedBudget: return "TruncatedBudget";
    }
    return "unknown";
}

void TruncationPolicy::validate() const {
    if (!(size_floor > 0.0) || !std::isfinite(size_floor)) throw DomainError("policy: size_floor must be > 0");
    if (!(time_horizon > 0.0)) throw DomainError("policy: time_horizon must be > 0");
    if (!(path_step > 0.0) || !std::isfinite(path_step)) throw DomainError("policy: path_step must be > 0");
    if (checkpoint_stride == 0) throw DomainError("policy: checkpoint_stride must be >= 1");
    if (!(absorption.stop_cutoff > 0.0)) throw DomainError("policy: stop_cutoff must be > 0");
    if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end())) throw DomainError("policy: snapshot_times must be sorted");
    if (!(max_process_time > 0.0)) throw DomainError("policy: max_process_time must be > 0");
}

std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t root, const UlamLabel& label) {
    std::vector<std::uint64_t> words{stream::cell, root};
    words.insert(words.end(), label.path.begin(), label.path.end());
    return derive_seed(master_seed, words);
}

CellRecord simulate_cell(double x0, const CumulantModel& model, const TruncationPolicy& policy, std::uint64_t seed) {
    return simulate_cell(x0, require_triplet(model), model.alpha(), policy, seed);
}

CellRecord simulate_cell(double x0, const LevyTriplet& triplet, double alpha, const TruncationPolicy& policy,
                         std::uint64_t seed) {
    if (!(x0 > 0.0) || !std::isfinite(x0)) throw DomainError("simulate_cell: x0 must be > 0");
    if (!(alpha < 0.0)) throw DomainError("simulate_cell: alpha must be < 0");
    policy.validate();
    const PathSimulator sim(triplet, policy.path_step);
    const double ts = std::pow(x0, -alpha);
    std::vector<double> targets;
    for (double t : policy.snapshot_times) targets.push_back(t / ts);
    CellTrace tr = trace_cell(sim, seed, 1.0, policy.size_floor / x0, alpha, policy, targets);
    CellRecord r;
    r.seed = seed;
    r.size_rel = 1.0;
    r.initial_size = x0;
    r.death_age_rel = tr.death_age;
    r.death_age = ts * tr.death_age;
    r.residual_size_rel = tr.residual;
    r.status = tr.status;
    r.expanded = true;
    r.children = std::move(tr.children);
    r.checkpoints = std::move(tr.checkpoints);
    r.snapshots = std::move(tr.snapshots);
    return r;
}

CellSystem build_system(std::span<const double> root_sizes, const CumulantModel& model, const TruncationPolicy& policy,
                        std::uint64_t master_seed, unsigned threads) {
    policy.validate();
    if (root_sizes.empty()) throw DomainError("build_system: need at least one root");
    for (std::size_t k = 0; k < root_sizes.size(); ++k) {
        if (!(root_sizes[k] > 0.0) || !std::isfinite(root_sizes[k])) throw DomainError("build_system: root sizes must be > 0");
        if (k && root_sizes[k] > root_sizes[k - 1]) throw DomainError("build_system: root sizes must be nonincreasing");
    }
    const double alpha = model.alpha();
    const PathSimulator sim(require_triplet(model), policy.path_step);

    CellSystem sys;
    sys.policy_ = policy;
    sys.seed_ = master_seed;
    sys.roots_.assign(root_sizes.begin(), root_sizes.end());
    sys.alpha_ = alpha;
    sys.omega_minus_ = model.omega_minus();
    for (double x : sys.roots_) sys.time_scales_.push_back(std::pow(x, -alpha));

    auto& recs = sys.records_;
    std::size_t budget_used = 0;
    // Decides whether the record is expanded; frozen records are finalised here.
    auto classify = [&](CellRecord& r) {
        const double eps = policy.size_floor / sys.roots_[r.root];
        const double horizon = policy.time_horizon / sys.time_scales_[r.root];
        CellStatus frozen = CellStatus::Absorbed;
        if (r.size_rel < eps) {
            frozen = CellStatus::TruncatedSize;
        } else if (r.generation() >= policy.generation_cap) {
            frozen = CellStatus::TruncatedGeneration;
        } else if (!(r.birth_time_rel < horizon)) {
            frozen = CellStatus::TruncatedTime;
        } else if (budget_used >= policy.cell_budget) {
            frozen = CellStatus::TruncatedBudget;
            sys.stats_.budget_exhausted = true;
        } else {
            ++budget_used;
            r.expanded = true;
            return;
        }
        r.expanded = false;
        r.status = frozen;
        r.residual_size_rel = r.size_rel;
    };
    auto finish_physical = [&](CellRecord& r) {
        const double xs = sys.roots_[r.root];
        const double ts = sys.time_scales_[r.root];
        r.initial_size = xs * r.size_rel;
        r.birth_time = ts * r.birth_time_rel;
        r.death_age = ts * r.death_age_rel;
    };

    std::vector<std::vector<double>> targets(sys.roots_.size());
    for (std::size_t k = 0; k < sys.roots_.size(); ++k)
        for (double t : policy.snapshot_times) targets[k].push_back(t / sys.time_scales_[k]);

    std::vector<std::size_t> frontier;
    for (std::size_t k = 0; k < sys.roots_.size(); ++k) {
        CellRecord r;
        r.root = k;
        r.size_rel = 1.0;
        r.seed = cell_seed(master_seed, k, r.label);
        classify(r);
        if (r.expanded) frontier.push_back(recs.size());
        recs.push_back(std::move(r));
    }

    while (!frontier.empty()) {
        std::vector<CellTrace> traces(frontier.size());
        parallel_for(frontier.size(), threads, [&](std::size_t i) {
            const CellRecord& r = recs[frontier[i]];
            traces[i] = trace_cell(sim, r.seed, r.size_rel, policy.size_floor / sys.roots_[r.root], alpha, policy,
                                   targets[r.root], r.birth_time_rel);
        });
        std::vector<std::size_t> next;
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            const std::size_t idx = frontier[i];
            CellTrace& tr = traces[i];
            {
                CellRecord& r = recs[idx];
                r.death_age_rel = tr.death_age;
                r.residual_size_rel = tr.residual;
                r.status = tr.status;
                r.checkpoints = std::move(tr.checkpoints);
                r.children = std::move(tr.children);
                r.snapshots = std::move(tr.snapshots);
            }
            for (std::size_t j = 0; j < recs[idx].children.size(); ++j) {
                CellRecord c;
                c.root = recs[idx].root;
                c.parent = idx;
                c.label = recs[idx].label.child(static_cast<std::uint32_t>(j + 1));
                c.seed = cell_seed(master_seed, c.root, c.label);
                c.birth_time_rel = recs[idx].birth_time_rel + recs[idx].children[j].age;
                c.size_rel = recs[idx].children[j].size;
                classify(c);
                recs[idx].children[j].index = recs.size();
                if (c.expanded) next.push_back(recs.size());
                recs.push_back(std::move(c));
            }
        }
        frontier = std::move(next);
    }

    for (auto& r : recs) {
        finish_physical(r);
        auto& st = sys.stats_;
        ++st.status_counts[static_cast<std::size_t>(r.status)];
        st.expanded += r.expanded ? 1 : 0;
        st.max_generation = std::max(st.max_generation, r.generation());
        if (!r.expanded && r.status == CellStatus::TruncatedSize) ++st.frozen_below_floor;
    }
    sys.stats_.records = recs.size();
    return sys;
}

CellSystem build_system(double root_size, const CumulantModel& model, const TruncationPolicy& policy,
                        std::uint64_t master_seed, unsigned threads) {
    const double roots[1] = {root_size};
    return build_system(std::span<const double>(roots, 1), model, policy, master_seed, threads);
}

std::string CellSystem::label_text(std::size_t index) const {
    const CellRecord& r = records_.at(index);
    if (roots_.size() == 1) return r.label.to_string();
    return "r" + std::to_string(r.root) + ":" + r.label.to_string();
}

GenerationMultiset branching_walk(const CellSystem& system, std::size_t n) {
    if (n > system.policy().generation_cap)
        throw DomainError("branching_walk: generation " + std::to_string(n) + " is beyond the generation cap");
    GenerationMultiset out;
    out.generation = n;
    for (const auto& r : system.records())
        if (r.generation() == n) out.log_sizes.push_back(std::log(r.initial_size));
    std::sort(out.log_sizes.begin(), out.log_sizes.end());
    return out;
}

double intrinsic_martingale(const CellSystem& system, std::size_t n) {
    if (n > system.policy().generation_cap)
        throw DomainError("intrinsic_martingale: generation " + std::to_string(n) + " is beyond the generation cap");
    const double w = system.omega_minus();
    double total = 0.0;
    for (const auto& r : system.records()) {
        const std::size_t g = r.generation();
        if (g == n) {
            total += std::pow(r.initial_size, w);
        } else if (g < n) {
            const double x = system.size_scale(r.root) * r.residual_size_rel;
            total += std::pow(x, w);
        }
    }
    return total;
}

std::vector<double> fragments_at(const CellSystem& system, double t) {
    if (!(t >= 0.0)) throw DomainError("fragments_at: t must be >= 0");
    if (t >= system.policy().time_horizon) throw DomainError("fragments_at: t beyond the policy horizon");
    std::vector<double> sizes;
    const auto& snaps = system.policy().snapshot_times;
    const auto hit = std::find(snaps.begin(), snaps.end(), t);
    if (hit != snaps.end()) {
        const auto k = static_cast<std::size_t>(hit - snaps.begin());
        for (const auto& r : system.records())
            for (const auto& s : r.snapshots)
                if (s.time_index == k) sizes.push_back(system.size_scale(r.root) * s.size);
        std::sort(sizes.begin(), sizes.end(), std::greater<>());
        return sizes;
    }
    for (const auto& r : system.records()) {
        if (!r.expanded) continue;
        const double t_rel = t / system.time_scale(r.root);
        const double age = t_rel - r.birth_time_rel;
        if (age < 0.0 || age >= r.death_age_rel) continue;
        const auto& cp = r.checkpoints;
        auto it = std::upper_bound(cp.begin(), cp.end(), age,
                                   [](double a, const PathCheckpoint& c) { return a < c.age; });
        const auto& node = *(it - 1);
        sizes.push_back(system.size_scale(r.root) * node.size);
    }
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    return sizes;
}

std::string export_tree(const CellSystem& system) {
    std::string out;
    for (std::size_t i = 0; i < system.size(); ++i) {
        const auto& r = system[i];
        out += system.label_text(i);
        out += '\t';
        out += r.parent == kNoParent ? std::string("-") : system.label_text(r.parent);
        out += '\t';
        out += format_double(r.birth_time);
        out += '\t';
        out += format_double(r.initial_size);
        out += '\t';
        out += format_double(r.death_age);
        out += '\t';
        out += to_string(r.status);
        out += '\n';
    }
    return out;
}

}  // namespace gfrag

#include "gfrag/area.hpp"

#include "gfrag/error.hpp"
#include "gfrag/numeric.hpp"
#include "gfrag/parallel.hpp"
#include "gfrag/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gfrag {

namespace {

double uniform01(std::uint64_t seed) {
    return static_cast<double>(mix64(seed) >> 11) * 0x1.0p-53;
}

std::vector<double> sorted_copy(std::span<const double> xs) {
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    return v;
}

FragmentStats empty_stats(std::span<const double> t_grid, std::span<const double> eps_grid) {
    if (t_grid.empty() || eps_grid.empty()) throw DomainError("fragment_stats: grids must be nonempty");
    for (double e : eps_grid)
        if (!(e > 0.0)) throw DomainError("fragment_stats: eps grid must be positive");
    FragmentStats st;
    st.t_grid.assign(t_grid.begin(), t_grid.end());
    st.eps_grid = sorted_copy(eps_grid);
    st.m.assign(st.t_grid.size() * st.eps_grid.size(), 0.0);
    st.n.assign(st.m.size(), 0.0);
    st.power_sum.assign(st.t_grid.size(), 0.0);
    st.log_largest_sum.assign(st.t_grid.size(), 0.0);
    st.nonempty.assign(st.t_grid.size(), 0);
    return st;
}

}  // namespace

const char* to_string(AreaMode mode) {
    return mode == AreaMode::Freeze ? "Freeze" : "SpineExtend";
}

std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t k, std::size_t r) {
    return derive_seed(seed, {stream::replica, k, r});
}

// ---------------------------------------------------------------------------
// Residual lifetimes

ResidualLifetimeBank::ResidualLifetimeBank(std::vector<double> samples, double alpha)
    : samples_(std::move(samples)), alpha_(alpha) {
    for (double v : samples_)
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("residual bank: samples must be positive and finite");
}

ResidualLifetimeBank ResidualLifetimeBank::build(const CumulantModel& model, std::size_t n, std::uint64_t seed,
                                                 const ExpFunctionalOptions& options, unsigned threads) {
    if (!model.triplet()) throw DomainError("residual bank: the model has no spine triplet");
    if (n == 0) throw DomainError("residual bank: need at least one sample");
    const LevyTriplet spine = build_spine_triplet(model);
    auto s = sample_exp_functional(spine, model.alpha(), n, derive_seed(seed, {stream::bank}), options, threads);
    return ResidualLifetimeBank(std::move(s.values), model.alpha());
}

double ResidualLifetimeBank::draw(std::uint64_t seed) const {
    if (samples_.empty()) throw DomainError("residual bank is empty");
    const auto idx = static_cast<std::size_t>(uniform01(seed) * static_cast<double>(samples_.size()));
    return samples_[std::min(idx, samples_.size() - 1)];
}

// ---------------------------------------------------------------------------
// Profiles

AreaProfile::AreaProfile(std::vector<AreaAtom> atoms, AreaMode mode) : atoms_(std::move(atoms)), mode_(mode) {
    for (const auto& a : atoms_)
        if (!(a.mass >= 0.0) || !(a.location >= 0.0)) throw DomainError("area profile: bad atom");
    std::stable_sort(atoms_.begin(), atoms_.end(),
                     [](const AreaAtom& a, const AreaAtom& b) { return a.location < b.location; });
    cumulative_.resize(atoms_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) cumulative_[i] = acc += atoms_[i].mass;
}

double AreaProfile::operator()(double t) const {
    const auto it = std::upper_bound(atoms_.begin(), atoms_.end(), t,
                                     [](double v, const AreaAtom& a) { return v < a.location; });
    if (it == atoms_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
}

std::vector<double> AreaProfile::evaluate(std::span<const double> t_grid) const {
    std::vector<double> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) out.push_back((*this)(t));
    return out;
}

double AreaProfile::location_quantile(double q) const {
    if (atoms_.empty()) throw InsufficientData("area profile: no atoms");
    const double target = std::clamp(q, 0.0, 1.0) * total_mass();
    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), target);
    const std::size_t i = it == cumulative_.end() ? atoms_.size() - 1 : static_cast<std::size_t>(it - cumulative_.begin());
    return atoms_[i].location;
}

AreaProfile area_profile(const CellSystem& system, AreaMode mode, std::uint64_t seed, const ResidualLifetimeBank* bank) {
    const double alpha = system.alpha();
    if (mode == AreaMode::SpineExtend) {
        if (!bank || bank->empty()) throw DomainError("area_profile: SpineExtend needs residual lifetimes of the spine");
        if (std::abs(bank->alpha() - alpha) > 1e-12) throw DomainError("area_profile: residual bank built for another alpha");
    }
    const double w = system.omega_minus();
    std::vector<AreaAtom> atoms;
    atoms.reserve(system.size());
    for (std::size_t i = 0; i < system.size(); ++i) {
        const CellRecord& r = system[i];
        AreaAtom a;
        a.record = i;
        if (r.expanded) {
            a.start = r.birth_time + r.death_age;
            a.size = system.size_scale(r.root) * r.residual_size_rel;
        } else {
            a.start = r.birth_time;
            a.size = r.initial_size;
        }
        a.mass = std::pow(a.size, w);
        a.location = a.start;
        if (mode == AreaMode::SpineExtend && a.size > 0.0)
            a.location += std::pow(a.size, -alpha) * bank->draw(derive_seed(seed, {stream::residual, i}));
        atoms.push_back(a);
    }
    return AreaProfile(std::move(atoms), mode);
}

// ---------------------------------------------------------------------------
// Fragment statistics

double FragmentStats::typical_largest(std::size_t ti) const {
    if (nonempty.at(ti) == 0) return 0.0;
    return std::exp(log_largest_sum[ti] / static_cast<double>(nonempty[ti]));
}

FragmentStats& FragmentStats::operator+=(const FragmentStats& other) {
    if (systems == 0) return *this = other;
    if (other.systems == 0) return *this;
    if (t_grid != other.t_grid || eps_grid != other.eps_grid)
        throw DomainError("fragment stats: cannot pool statistics on different grids");
    for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] += other.m[i];
        n[i] += other.n[i];
    }
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        power_sum[i] += other.power_sum[i];
        log_largest_sum[i] += other.log_largest_sum[i];
        nonempty[i] += other.nonempty[i];
    }
    systems += other.systems;
    size_floor = std::max(size_floor, other.size_floor);
    return *this;
}

FragmentStats fragment_stats(const CellSystem& system, std::span<const double> t_grid, std::span<const double> eps_grid,
                             const AreaProfile* pending) {
    FragmentStats st = empty_stats(t_grid, eps_grid);
    st.systems = 1;
    st.omega_minus = system.omega_minus();
    st.size_floor = system.policy().size_floor;
    const double w = st.omega_minus;
    const std::size_t ne = st.eps_grid.size();
    std::vector<double> sizes;
    std::vector<double> prefix;
    for (std::size_t ti = 0; ti < st.t_grid.size(); ++ti) {
        const double t = st.t_grid[ti];
        sizes = fragments_at(system, t);
        if (pending)
            for (const auto& a : pending->atoms())
                if (a.start <= t && t < a.location) sizes.push_back(a.size);
        std::sort(sizes.begin(), sizes.end());
        prefix.assign(sizes.size() + 1, 0.0);
        for (std::size_t i = 0; i < sizes.size(); ++i) prefix[i + 1] = prefix[i] + std::pow(sizes[i], w);
        st.power_sum[ti] = prefix.back();
        if (!sizes.empty() && sizes.back() > 0.0) {
            st.log_largest_sum[ti] = std::log(sizes.back());
            st.nonempty[ti] = 1;
        }
        for (std::size_t ei = 0; ei < ne; ++ei) {
            const auto k = static_cast<std::size_t>(
                std::upper_bound(sizes.begin(), sizes.end(), st.eps_grid[ei]) - sizes.begin());
            st.m[ti * ne + ei] = prefix[k];
            st.n[ti * ne + ei] = static_cast<double>(sizes.size() - k);
        }
    }
    return st;
}

// ---------------------------------------------------------------------------
// Profile estimates

ProfileEstimate profile_estimate(const FragmentStats& stats, const CumulantModel& model,
                                 const ProfileEstimateOptions& options) {
    if (stats.systems == 0) throw InsufficientData("profile_estimate: no systems in the statistics");
    ProfileEstimate out;
    out.regime = regime_classify(model);
    out.converges = out.regime.regime == Regime::AbsolutelyContinuous;
    const double alpha = model.alpha();
    const double w = model.omega_minus();
    const double kp = model.kprime_at_omega_minus();
    const double per_system = 1.0 / static_cast<double>(stats.systems);
    const std::size_t ne = stats.eps_grid.size();

    for (std::size_t ti = 0; ti < stats.t_grid.size(); ++ti) {
        ProfilePoint p;
        p.t = stats.t_grid[ti];
        p.eps_lo = options.lower_factor * stats.size_floor;
        p.eps_hi = stats.typical_largest(ti) / options.upper_factor;
        std::vector<double> le, lm, ln, am, an;
        for (std::size_t ei = 0; ei < ne; ++ei) {
            const double e = stats.eps_grid[ei];
            if (e < p.eps_lo || e > p.eps_hi) continue;
            const double m = stats.m_at(ti, ei) * per_system;
            const double n = stats.n_at(ti, ei) * per_system;
            if (!(m > 0.0) || !(n > 0.0)) continue;
            le.push_back(std::log(e));
            lm.push_back(std::log(m));
            ln.push_back(std::log(n));
            am.push_back(alpha * std::log(e) + std::log(m));
            an.push_back((w + alpha) * std::log(e) + std::log(n));
        }
        p.window_points = le.size();
        const bool interior = p.t >= options.interior_lo && p.t <= options.interior_hi;
        if (!interior || le.size() < std::max<std::size_t>(options.min_window_points, 2)) {
            out.points.push_back(p);
            continue;
        }
        p.estimated = true;
        const auto fm = least_squares(le, lm);
        const auto fn = least_squares(le, ln);
        p.m_slope = fm.slope;
        p.m_slope_se = fm.slope_se;
        p.n_slope = fn.slope;
        p.n_slope_se = fn.slope_se;
        std::size_t low = 0;
        while (low < le.size() && le[low] <= le.front() + std::log(10.0) + 1e-12) ++low;
        if (low >= 2) {
            const auto fl = least_squares(std::span(le).first(low), std::span(ln).first(low));
            p.n_low_slope = fl.slope;
        } else {
            p.n_low_slope = fn.slope;
        }
        const double mean_am = std::accumulate(am.begin(), am.end(), 0.0) / static_cast<double>(am.size());
        const double mean_an = std::accumulate(an.begin(), an.end(), 0.0) / static_cast<double>(an.size());
        p.a_from_m = alpha * kp * std::exp(mean_am);
        p.a_from_n_raw = (w + alpha) * std::abs(kp) * std::exp(mean_an);
        std::vector<double> u, nn;
        for (std::size_t k = 0; k < le.size(); ++k) {
            u.push_back(std::exp(-(w + alpha) * le[k]));
            nn.push_back(std::exp(ln[k]));
        }
        const auto fo = least_squares(u, nn);
        p.a_from_n = (w + alpha) * std::abs(kp) * fo.slope;
        p.n_offset = fo.intercept;
        const double e0 = std::exp(le.front());
        p.small_eps_ratio = (w + alpha) * std::pow(e0, w) * std::exp(ln.front()) / (-alpha * std::exp(lm.front()));
        out.points.push_back(p);
    }
    return out;
}

std::pair<double, double> interior_range(std::span<const AreaProfile> profiles, double lo, double hi) {
    std::vector<double> loc;
    std::vector<double> mass;
    for (const auto& p : profiles)
        for (const auto& a : p.atoms()) {
            loc.push_back(a.location);
            mass.push_back(a.mass);
        }
    if (loc.empty()) throw InsufficientData("interior_range: no atoms");
    return {weighted_quantile(loc, mass, lo), weighted_quantile(loc, mass, hi)};
}

// ---------------------------------------------------------------------------
// Tagged leaves

LeafTagger::LeafTagger(const CellSystem& system, const AreaProfile& profile)
    : system_(&system), profile_(&profile), subtree_(system.size(), 0.0), own_atom_(system.size(), kNoParent) {
    const auto& atoms = profile.atoms();
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        const std::size_t r = atoms[k].record;
        if (r >= system.size() || own_atom_[r] != kNoParent)
            throw DomainError("leaf tagger: profile does not belong to this system");
        own_atom_[r] = k;
    }
    for (std::size_t i = system.size(); i-- > 0;) {
        if (own_atom_[i] == kNoParent) throw DomainError("leaf tagger: profile does not belong to this system");
        double m = atoms[own_atom_[i]].mass;
        for (const auto& c : system[i].children)
            if (c.index != kNoParent) m += subtree_[c.index];
        subtree_[i] = m;
    }
}

TaggedLeaf LeafTagger::tag(std::uint64_t seed) const {
    const CellSystem& sys = *system_;
    const auto& atoms = profile_->atoms();
    const std::size_t roots = sys.root_sizes().size();
    double total = 0.0;
    for (std::size_t k = 0; k < roots; ++k) total += subtree_[sys.root_record(k)];
    if (!(total > 0.0)) throw InsufficientData("tag_leaf: the system carries no area");

    TaggedLeaf leaf;
    std::uint64_t step = 0;
    auto next_uniform = [&] { return uniform01(derive_seed(seed, {stream::tag, step++})); };

    double u = next_uniform() * total;
    std::size_t cell = sys.root_record(roots - 1);
    for (std::size_t k = 0; k < roots; ++k) {
        const double m = subtree_[sys.root_record(k)];
        if (u < m && m > 0.0) {
            cell = sys.root_record(k);
            break;
        }
        u -= m;
    }
    leaf.root = sys[cell].root;

    for (;;) {
        const CellRecord& r = sys[cell];
        const double xs = sys.size_scale(r.root);
        const double ts = sys.time_scale(r.root);
        leaf.records.push_back(cell);
        const double own = atoms[own_atom_[cell]].mass;
        double v = next_uniform() * subtree_[cell];
        std::size_t chosen = kNoParent;
        if (v >= own) {
            v -= own;
            std::size_t last_positive = kNoParent;
            for (std::size_t j = 0; j < r.children.size(); ++j) {
                const double m = subtree_[r.children[j].index];
                if (m <= 0.0) continue;
                last_positive = j;
                if (v < m) {
                    chosen = j;
                    break;
                }
                v -= m;
            }
            if (chosen == kNoParent) chosen = last_positive;
        }
        if (chosen == kNoParent) {
            const AreaAtom& a = atoms[own_atom_[cell]];
            for (const auto& cp : r.checkpoints) leaf.trajectory.push_back({r.birth_time + ts * cp.age, xs * cp.size});
            if (r.checkpoints.empty()) leaf.trajectory.push_back({r.birth_time, r.initial_size});
            leaf.residual = a.location - r.birth_time;
            leaf.lifetime = a.location;
            leaf.atom = own_atom_[cell];
            return leaf;
        }
        const ChildBirth& c = r.children[chosen];
        for (const auto& cp : r.checkpoints) {
            if (cp.age > c.age) break;
            leaf.trajectory.push_back({r.birth_time + ts * cp.age, xs * cp.size});
            if (cp.age == c.age) break;  // left limit at the jump
        }
        leaf.segments.push_back(ts * c.age);
        leaf.path.push_back(static_cast<std::uint32_t>(chosen + 1));
        cell = c.index;
    }
}

TaggedLeaf tag_leaf(const CellSystem& system, const AreaProfile& profile, std::uint64_t seed) {
    return LeafTagger(system, profile).tag(seed);
}

std::vector<double> size_biased_tagged_lifetimes(const CumulantModel& model, const TruncationPolicy& policy,
                                                 const ResidualLifetimeBank& bank, std::size_t n, std::uint64_t seed,
                                                 std::size_t pool_factor, unsigned threads) {
    if (n == 0 || pool_factor == 0) throw DomainError("size_biased_tagged_lifetimes: n and pool_factor must be >= 1");
    const std::size_t pool = n * pool_factor;
    std::vector<double> mass(pool);
    parallel_for(pool, threads, [&](std::size_t r) {
        const auto sys = build_system(1.0, model, policy, replica_seed(seed, 0, r));
        mass[r] = area_profile(sys, AreaMode::SpineExtend, replica_seed(seed, 1, r), &bank).total_mass();
    });
    std::vector<double> cumulative(pool);
    std::partial_sum(mass.begin(), mass.end(), cumulative.begin());
    if (!(cumulative.back() > 0.0)) throw InsufficientData("size_biased_tagged_lifetimes: no area in the pool");

    // Draw d picks system picks[d]; draws are then grouped per system.
    std::vector<std::size_t> picks(n);
    for (std::size_t d = 0; d < n; ++d) {
        const double u = uniform01(derive_seed(seed, {stream::aux, d})) * cumulative.back();
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        picks[d] = std::min(static_cast<std::size_t>(it - cumulative.begin()), pool - 1);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return picks[a] < picks[b]; });
    std::vector<std::pair<std::size_t, std::size_t>> groups;  // [begin, end) in order
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && picks[order[j]] == picks[order[i]]) ++j;
        groups.emplace_back(i, j);
        i = j;
    }
    std::vector<double> out(n);
    parallel_for(groups.size(), threads, [&](std::size_t g) {
        const std::size_t r = picks[order[groups[g].first]];
        const auto sys = build_system(1.0, model, policy, replica_seed(seed, 0, r));
        const auto prof = area_profile(sys, AreaMode::SpineExtend, replica_seed(seed, 1, r), &bank);
        const LeafTagger tagger(sys, prof);
        for (std::size_t i = groups[g].first; i < groups[g].second; ++i) {
            const std::size_t d = order[i];
            out[d] = tagger.tag(derive_seed(seed, {stream::tag, d})).lifetime;
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Distributional checks

BranchingIdentityReport branching_identity_check(const CumulantModel& model, const TruncationPolicy& policy,
                                                 const ResidualLifetimeBank& bank, double t, double s,
                                                 std::size_t n_rep, std::uint64_t seed, unsigned threads) {
    if (!(t >= 0.0) || !(s >= 0.0)) throw DomainError("branching_identity_check: t and s must be >= 0");
    if (n_rep == 0) throw DomainError("branching_identity_check: n_rep must be >= 1");
    const double alpha = model.alpha();
    const double w = model.omega_minus();
    BranchingIdentityReport rep;
    rep.t = t;
    rep.s = s;
    rep.direct.resize(n_rep);
    rep.composed.resize(n_rep);
    parallel_for(n_rep, threads, [&](std::size_t r) {
        {
            const auto sys = build_system(1.0, model, policy, replica_seed(seed, 2, r));
            const auto prof = area_profile(sys, AreaMode::SpineExtend, replica_seed(seed, 3, r), &bank);
            rep.direct[r] = prof(t + s) - prof(t);
        }
        const auto sys = build_system(1.0, model, policy, replica_seed(seed, 4, r));
        const auto prof = area_profile(sys, AreaMode::SpineExtend, replica_seed(seed, 5, r), &bank);
        double total = 0.0;
        for (const auto& a : prof.atoms())
            if (a.start <= t && t < a.location && a.location <= t + s) total += a.mass;
        const auto frags = fragments_at(sys, t);
        const std::uint64_t fresh = replica_seed(seed, 6, r);
        for (std::size_t i = 0; i < frags.size(); ++i) {
            const double x = frags[i];
            TruncationPolicy unit = policy;
            unit.size_floor = policy.size_floor / x;
            unit.time_horizon = std::numeric_limits<double>::infinity();
            const auto sub = build_system(1.0, model, unit, derive_seed(fresh, {i, 0}));
            const auto sub_prof = area_profile(sub, AreaMode::SpineExtend, derive_seed(fresh, {i, 1}), &bank);
            total += std::pow(x, w) * sub_prof(s * std::pow(x, alpha));
        }
        rep.composed[r] = total;
    });
    rep.ks_distance = ks_two_sample(rep.direct, rep.composed);
    rep.pass = rep.ks_distance < rep.threshold;
    return rep;
}

SmallTimeReport small_time_check(const CumulantModel& model, const TruncationPolicy& policy,
                                 const ResidualLifetimeBank& bank, std::span<const double> eps_grid, std::size_t n_rep,
                                 std::uint64_t seed, AreaMode mode, unsigned threads) {
    if (eps_grid.empty()) throw DomainError("small_time_check: empty grid");
    if (n_rep < 2) throw DomainError("small_time_check: need at least two replicas");
    std::vector<double> eps(eps_grid.begin(), eps_grid.end());
    for (double e : eps)
        if (!(e > 0.0)) throw DomainError("small_time_check: eps must be > 0");
    std::sort(eps.begin(), eps.end(), std::greater<>());
    std::vector<std::vector<double>> values(eps.size(), std::vector<double>(n_rep));
    parallel_for(n_rep, threads, [&](std::size_t r) {
        const auto sys = build_system(1.0, model, policy, replica_seed(seed, 7, r));
        const auto prof = area_profile(sys, mode, replica_seed(seed, 8, r), mode == AreaMode::SpineExtend ? &bank : nullptr);
        for (std::size_t k = 0; k < eps.size(); ++k) values[k][r] = prof(eps[k]);
    });
    SmallTimeReport rep;
    rep.n_rep = n_rep;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        const auto est = mean_and_se(values[k]);
        rep.rows.push_back({eps[k], est.mean, est.std_error, est.mean / eps[k]});
    }
    rep.strictly_decreasing = true;
    for (std::size_t k = 1; k < rep.rows.size(); ++k)
        if (!(rep.rows[k].ratio < rep.rows[k - 1].ratio)) rep.strictly_decreasing = false;
    rep.low_power = n_rep < kLowPowerThreshold;
    rep.pass = rep.strictly_decreasing && !rep.low_power;
    return rep;
}

}  // namespace gfrag

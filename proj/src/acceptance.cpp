#include "gfrag/acceptance.hpp"

#include "gfrag/area.hpp"
#include "gfrag/cellsystem.hpp"
#include "gfrag/cumulant.hpp"
#include "gfrag/dimension.hpp"
#include "gfrag/error.hpp"
#include "gfrag/lamperti.hpp"
#include "gfrag/parallel.hpp"
#include "gfrag/numeric.hpp"
#include "gfrag/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace gfrag {

namespace {

using nlohmann::json;

CriterionResult start(int id, const char* name) {
    CriterionResult r;
    r.id = id;
    r.name = name;
    return r;
}

std::size_t scaled(std::size_t n, const AcceptanceSettings& s) {
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(static_cast<double>(n) * s.scale)));
}

const CumulantModel& reference(double alpha) {
    static const CumulantModel m02 = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.2);
    static const CumulantModel m05 = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.5);
    if (alpha == -0.2) return m02;
    if (alpha == -0.5) return m05;
    throw DomainError("acceptance: no reference model at this alpha");
}

std::uint64_t criterion_seed(const AcceptanceSettings& s, int id, std::uint64_t k = 0) {
    return derive_seed(s.seed, {stream::aux, static_cast<std::uint64_t>(id), k});
}

TruncationPolicy policy_with_floor(double floor) {
    TruncationPolicy p;
    p.size_floor = floor;
    return p;
}

// Closed form of the reference cumulant, kept apart from the library code.
double reference_kappa(double q) { return -3.0 * q + q * q + std::pow(2.0, 1.0 - q) - 1.0; }

// --- 1 -----------------------------------------------------------------------
CriterionResult boltzmann_roots(const AcceptanceSettings&) {
    auto r = start(1, "boltzmann-roots");
    r.target = 0.0;
    r.tolerance = 1e-9;
    json rows = json::array();
    double worst = 0.0;
    double slowest = 0.0;
    for (double theta : {1.05, 1.1, 1.25, 1.4, 1.5}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto m = CumulantModel::boltzmann(theta);
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double err = std::max(std::abs(m.omega_minus() - (theta + 0.5)), std::abs(m.omega_plus() - (theta + 1.5)));
        worst = std::max(worst, err);
        slowest = std::max(slowest, dt);
        rows.push_back({{"theta", theta}, {"omega_minus", m.omega_minus()}, {"omega_plus", m.omega_plus()},
                        {"error", err}, {"seconds", dt}});
    }
    r.measured = worst;
    r.pass = worst < r.tolerance && slowest < 1.0;
    r.data = {{"rows", rows}, {"max_seconds", slowest}, {"time_limit_seconds", 1.0}};
    r.detail = "max root error " + format_double(worst) + ", slowest " + format_double(slowest) + " s";
    return r;
}

// --- 2 -----------------------------------------------------------------------
CriterionResult root_oracle(const AcceptanceSettings&) {
    auto r = start(2, "root-oracle");
    r.tolerance = 1e-8;
    const auto t0 = std::chrono::steady_clock::now();
    const auto& m = reference(-0.2);
    // 10^6-point scan of the closed form; each sign change is then bisected.
    const std::size_t n = 1'000'000;
    const double lo = 1e-4;
    const double hi = 10.0;
    std::vector<double> roots;
    double prev = reference_kappa(lo);
    for (std::size_t i = 1; i <= n; ++i) {
        const double q = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
        const double cur = reference_kappa(q);
        if ((prev > 0) != (cur > 0)) {
            double a = lo + (hi - lo) * static_cast<double>(i - 1) / static_cast<double>(n);
            double b = q;
            const bool up = cur > 0;
            for (int k = 0; k < 100; ++k) {
                const double mid = 0.5 * (a + b);
                if ((reference_kappa(mid) > 0) == up) b = mid;
                else a = mid;
            }
            roots.push_back(0.5 * (a + b));
        }
        prev = cur;
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (roots.size() != 2) {
        r.detail = "oracle found " + std::to_string(roots.size()) + " sign changes";
        r.measured = std::numeric_limits<double>::infinity();
        return r;
    }
    const double err = std::max(std::abs(m.omega_minus() - roots[0]), std::abs(m.omega_plus() - roots[1]));
    r.measured = err;
    r.pass = err < r.tolerance && dt < 10.0;
    r.data = {{"omega_minus", m.omega_minus()}, {"omega_plus", m.omega_plus()},
              {"oracle_omega_minus", roots[0]}, {"oracle_omega_plus", roots[1]}, {"grid_points", n},
              {"seconds", dt}};
    r.detail = "omega- " + format_double(m.omega_minus()) + ", omega+ " + format_double(m.omega_plus()) +
               ", max deviation from grid oracle " + format_double(err);
    return r;
}

// --- 3 -----------------------------------------------------------------------
CriterionResult martingale_mean(const AcceptanceSettings& s) {
    auto r = start(3, "martingale-mean");
    r.target = 1.0;
    r.tolerance = 3.0;  // standard errors
    const auto& m = reference(-0.2);
    const std::size_t systems = scaled(1000, s);
    auto p = policy_with_floor(1e-3);
    p.generation_cap = 3;
    std::vector<std::vector<double>> values(3, std::vector<double>(systems));
    parallel_for(systems, s.threads, [&](std::size_t i) {
        const auto sys = build_system(1.0, m, p, replica_seed(criterion_seed(s, 3), 0, i));
        for (std::size_t n = 1; n <= 3; ++n) values[n - 1][i] = intrinsic_martingale(sys, n);
    });
    json rows = json::array();
    double worst = 0.0;
    std::ostringstream d;
    for (std::size_t n = 1; n <= 3; ++n) {
        const auto est = mean_and_se(values[n - 1]);
        const double z = (est.mean - 1.0) / est.std_error;
        worst = std::max(worst, std::abs(z));
        rows.push_back({{"n", n}, {"mean", est.mean}, {"std_error", est.std_error}, {"z", z}});
        d << (n > 1 ? ", " : "") << "M(" << n << ")=" << format_double(est.mean) << "±" << format_double(est.std_error);
    }
    r.measured = worst;
    r.pass = worst < r.tolerance;
    r.data = {{"systems", systems}, {"rows", rows}, {"max_abs_z", worst}};
    r.detail = d.str() + " over " + std::to_string(systems) + " systems";
    return r;
}

// --- 4 -----------------------------------------------------------------------
CriterionResult inverse_moment(const AcceptanceSettings& s) {
    auto r = start(4, "spine-inverse-moment");
    const auto& m = reference(-0.2);
    const auto spine = build_spine_triplet(m);
    const auto samples = sample_exp_functional(spine, m.alpha(), scaled(100'000, s), criterion_seed(s, 4), {}, s.threads);
    const auto rep = inverse_moment_check(samples, m);
    r.measured = rep.estimate;
    r.target = rep.reference;
    r.tolerance = 3.0 * rep.std_error;
    r.pass = rep.pass;
    r.data = {{"n", rep.n}, {"estimate", rep.estimate}, {"std_error", rep.std_error}, {"reference", rep.reference},
              {"z", rep.z_score}, {"low_power", rep.low_power}};
    r.detail = "mean(1/I)=" + format_double(rep.estimate) + " vs " + format_double(rep.reference) +
               ", z=" + format_double(rep.z_score);
    return r;
}

// --- 5 -----------------------------------------------------------------------
CriterionResult tagged_leaf_law(const AcceptanceSettings& s) {
    auto r = start(5, "tagged-leaf-law");
    r.tolerance = 0.05;
    const auto& m = reference(-0.2);
    const std::size_t n = scaled(2000, s);
    const auto bank = ResidualLifetimeBank::build(m, kDefaultBankSize, criterion_seed(s, 5, 0), {}, s.threads);
    const auto tagged = size_biased_tagged_lifetimes(m, policy_with_floor(1e-3), bank, n, criterion_seed(s, 5, 1), 5,
                                                     s.threads);
    const auto direct = sample_exp_functional(build_spine_triplet(m), m.alpha(), n, criterion_seed(s, 5, 2), {}, s.threads);
    const double ks = ks_two_sample(tagged, direct.values);
    r.measured = ks;
    r.pass = ks < r.tolerance;
    r.data = {{"n_tagged", tagged.size()}, {"n_direct", direct.count()}, {"ks", ks},
              {"ks_p_value", ks_p_value(ks, tagged.size(), direct.count())}};
    r.detail = "KS distance " + format_double(ks) + " (n=" + std::to_string(n) + " each)";
    return r;
}

// --- 6 -----------------------------------------------------------------------
CriterionResult self_similarity(const AcceptanceSettings& s) {
    auto r = start(6, "self-similarity");
    const auto& m = reference(-0.2);
    const double alpha = m.alpha();
    std::size_t compared = 0;
    std::size_t mismatches = 0;
    auto same = [&](double a, double b) {
        ++compared;
        if (a != b) ++mismatches;
    };
    for (double x0 : {2.0, 0.37, 13.0}) {
        const double ts = std::pow(x0, -alpha);
        for (std::uint64_t k = 0; k < 5; ++k) {
            const std::uint64_t seed = criterion_seed(s, 6, k);
            const auto p1 = policy_with_floor(1e-5);
            auto px = p1;
            px.size_floor = x0 * p1.size_floor;
            const auto c1 = simulate_cell(1.0, m, p1, seed);
            const auto cx = simulate_cell(x0, m, px, seed);
            same(cx.death_age, ts * c1.death_age);
            same(static_cast<double>(cx.children.size()), static_cast<double>(c1.children.size()));
            for (std::size_t i = 0; i < std::min(c1.children.size(), cx.children.size()); ++i) {
                same(cx.children[i].age, c1.children[i].age);
                same(cx.children[i].size, c1.children[i].size);
            }
            const auto s1 = build_system(1.0, m, p1, seed);
            const auto sx = build_system(x0, m, px, seed);
            same(static_cast<double>(sx.size()), static_cast<double>(s1.size()));
            for (std::size_t i = 0; i < std::min(s1.size(), sx.size()); ++i) {
                same(sx[i].initial_size, x0 * s1[i].initial_size);
                same(sx[i].birth_time, ts * s1[i].birth_time);
                same(sx[i].death_age, ts * s1[i].death_age);
                same(static_cast<double>(sx[i].status), static_cast<double>(s1[i].status));
            }
        }
    }
    r.measured = static_cast<double>(mismatches);
    r.pass = mismatches == 0;
    r.data = {{"compared_values", compared}, {"mismatches", mismatches}, {"x0", {2.0, 0.37, 13.0}}};
    r.detail = std::to_string(mismatches) + " mismatches among " + std::to_string(compared) + " compared values";
    return r;
}

// Shared simulation for the profile criteria.
struct ProfileRun {
    FragmentStats stats;
    std::vector<AreaProfile> profiles;
    ProfileEstimate estimate;
    std::pair<double, double> interior;
};

ProfileRun profile_run(const CumulantModel& m, double floor, std::size_t reps, std::vector<double> t_grid,
                       std::uint64_t seed, unsigned threads) {
    auto p = policy_with_floor(floor);
    p.checkpoint_stride = 1'000'000;
    p.snapshot_times = t_grid;
    const auto bank = ResidualLifetimeBank::build(m, kDefaultBankSize, derive_seed(seed, {stream::bank}), {}, threads);
    const auto eps = log_space(floor, 1.0, 41);
    ProfileRun run;
    run.profiles.resize(reps);
    std::vector<FragmentStats> per(reps);
    parallel_for(reps, threads, [&](std::size_t i) {
        const auto sys = build_system(1.0, m, p, replica_seed(seed, 0, i));
        run.profiles[i] = area_profile(sys, AreaMode::SpineExtend, replica_seed(seed, 1, i), &bank);
        per[i] = fragment_stats(sys, t_grid, eps, &run.profiles[i]);
    });
    run.stats = per.front();
    for (std::size_t i = 1; i < reps; ++i) run.stats += per[i];
    run.interior = interior_range(run.profiles);
    ProfileEstimateOptions o;
    o.interior_lo = run.interior.first;
    o.interior_hi = run.interior.second;
    run.estimate = profile_estimate(run.stats, m, o);
    return run;
}

// --- 7 -----------------------------------------------------------------------
CriterionResult ac_profile(const AcceptanceSettings& s) {
    auto r = start(7, "ac-profile");
    const auto& m = reference(-0.2);
    const double alpha = m.alpha();
    const double n_exponent = -(m.omega_minus() + alpha);
    const std::size_t reps = scaled(200, s);
    const auto run = profile_run(m, 1e-14, reps, lin_space(0.2, 3.0, 15), criterion_seed(s, 7), s.threads);
    double worst_m = 0.0;
    double worst_ratio = 0.0;
    double worst_n = 0.0;
    double worst_raw = 0.0;
    std::size_t used = 0;
    json pts = json::array();
    for (const auto& p : run.estimate.points) {
        if (!p.estimated) continue;
        ++used;
        const double dm = std::abs(p.m_slope - (-alpha));
        const double ratio = std::abs(p.a_from_n / p.a_from_m - 1.0);
        const double dn = std::abs(p.n_slope - n_exponent);
        const double raw = std::abs(p.small_eps_ratio - 1.0);
        worst_m = std::max(worst_m, dm);
        worst_ratio = std::max(worst_ratio, ratio);
        worst_n = std::max(worst_n, dn);
        worst_raw = std::max(worst_raw, raw);
        pts.push_back({{"t", p.t}, {"window", {p.eps_lo, p.eps_hi}}, {"m_slope", p.m_slope}, {"n_slope", p.n_slope},
                       {"a_from_m", p.a_from_m}, {"a_from_n", p.a_from_n}, {"a_from_n_raw", p.a_from_n_raw},
                       {"n_offset", p.n_offset}, {"small_eps_ratio", p.small_eps_ratio}});
    }
    r.target = -alpha;
    r.tolerance = 0.1;
    r.measured = worst_m;
    r.pass = used >= 3 && worst_m <= 0.1 && worst_ratio <= 0.2 && worst_n <= 0.15;
    r.data = {{"replicas", reps},
              {"size_floor", 1e-14},
              {"interior", {run.interior.first, run.interior.second}},
              {"estimated_points", used},
              {"max_m_slope_deviation", worst_m},
              {"m_slope_tolerance", 0.1},
              {"max_density_relative_gap", worst_ratio},
              {"density_tolerance", 0.2},
              {"n_exponent_target", n_exponent},
              {"max_n_slope_deviation", worst_n},
              {"n_slope_tolerance", 0.15},
              {"max_raw_pointwise_ratio_gap", worst_raw},
              {"points", pts}};
    std::ostringstream d;
    d << used << " interior t; max |M slope - " << format_double(-alpha) << "| = " << format_double(worst_m)
      << ", max |aN/aM - 1| = " << format_double(worst_ratio) << ", max |N slope - (" << format_double(n_exponent)
      << ")| = " << format_double(worst_n) << " (raw pointwise ratio gap " << format_double(worst_raw) << ")";
    r.detail = d.str();
    return r;
}

// --- 8 -----------------------------------------------------------------------
CriterionResult singular_dimension(const AcceptanceSettings& s) {
    auto r = start(8, "singular-dimension");
    const auto& m = reference(-0.5);
    const double floor = 1e-10;
    const std::size_t reps = scaled(400, s);
    const auto run = profile_run(m, floor, reps, lin_space(0.2, 1.2, 11), criterion_seed(s, 8), s.threads);
    LeafSample sample;
    for (const auto& p : run.profiles) sample.add_profile(p);
    // One decade starting just above the location resolution ε_cut^{−α}.
    const double resolution = std::pow(floor, -m.alpha());
    const auto grid = log_space(1e-7, 1.0, 36);
    const auto est = correlation_dimension(sample, grid, m, std::make_pair(3.0 * resolution, 30.0 * resolution));
    const double reference_dim = est.reference.value_or(std::nan(""));
    double n_low = 0.0;
    std::size_t used = 0;
    json pts = json::array();
    for (const auto& p : run.estimate.points) {
        if (!p.estimated) continue;
        ++used;
        n_low += p.n_low_slope;
        pts.push_back({{"t", p.t}, {"n_low_slope", p.n_low_slope}, {"n_slope", p.n_slope}});
    }
    const double mean_low = used ? n_low / static_cast<double>(used) : std::nan("");
    const double stable = 0.02;
    const bool stabilizes = used > 0 && mean_low > -stable;
    r.measured = est.slope;
    r.target = reference_dim;
    r.tolerance = 0.15;
    r.pass = std::abs(est.slope - reference_dim) <= r.tolerance && stabilizes;
    r.data = {{"replicas", reps},
              {"points", sample.size()},
              {"window", {est.window_lo, est.window_hi}},
              {"slope", est.slope},
              {"raw_slope", est.raw_slope},
              {"slope_std_error", est.std_error},
              {"reference", reference_dim},
              {"mean_n_low_slope", mean_low},
              {"n_stable_threshold", stable},
              {"n_stabilizes", stabilizes},
              {"n_points", pts}};
    r.detail = "correlation slope " + format_double(est.slope) + " vs " + format_double(reference_dim) +
               "; mean low-window N slope " + format_double(mean_low) + (stabilizes ? " (stabilizes)" : " (diverges)");
    return r;
}

// --- 9 -----------------------------------------------------------------------
CriterionResult small_time(const AcceptanceSettings& s) {
    auto r = start(9, "small-time-area");
    const auto& m = reference(-0.2);
    const auto bank = ResidualLifetimeBank::build(m, kDefaultBankSize, criterion_seed(s, 9, 0), {}, s.threads);
    const double eps[] = {0.4, 0.2, 0.1, 0.05};
    const std::size_t n = scaled(1000, s);
    const auto rep = small_time_check(m, policy_with_floor(1e-3), bank, eps, n, criterion_seed(s, 9, 1),
                                      AreaMode::SpineExtend, s.threads);
    json rows = json::array();
    std::ostringstream d;
    for (const auto& row : rep.rows) {
        rows.push_back({{"eps", row.eps}, {"mean_area", row.mean_area}, {"std_error", row.std_error}, {"ratio", row.ratio}});
        d << "E A(" << format_double(row.eps) << ")/eps=" << format_double(row.ratio) << " ";
    }
    std::size_t zero_rows = 0;
    for (const auto& row : rep.rows)
        if (row.mean_area == 0.0) ++zero_rows;
    r.measured = static_cast<double>(zero_rows);
    r.pass = rep.pass;
    r.data = {{"replicas", n}, {"rows", rows}, {"strictly_decreasing", rep.strictly_decreasing},
              {"low_power", rep.low_power}, {"rows_with_zero_mean", zero_rows}};
    d << (rep.strictly_decreasing ? "(strictly decreasing)" : "(not strictly decreasing)");
    r.detail = d.str();
    return r;
}

// --- 10 ----------------------------------------------------------------------
CriterionResult branching_identity(const AcceptanceSettings& s) {
    auto r = start(10, "branching-identity");
    const auto& m = reference(-0.2);
    const auto bank = ResidualLifetimeBank::build(m, kDefaultBankSize, criterion_seed(s, 10, 0), {}, s.threads);
    const std::size_t n = scaled(2000, s);
    const double t = 0.5;
    const double sh = 1.0;
    const auto rep = branching_identity_check(m, policy_with_floor(1e-3), bank, t, sh, n, criterion_seed(s, 10, 1),
                                              s.threads);
    r.measured = rep.ks_distance;
    r.tolerance = rep.threshold;
    r.pass = rep.pass;
    r.data = {{"t", t}, {"s", sh}, {"n_rep", n}, {"ks", rep.ks_distance},
              {"ks_p_value", ks_p_value(rep.ks_distance, n, n)},
              {"direct_mean", mean_and_se(rep.direct).mean}, {"composed_mean", mean_and_se(rep.composed).mean}};
    r.detail = "KS distance " + format_double(rep.ks_distance) + " at t=" + format_double(t) + ", s=" + format_double(sh);
    return r;
}

// --- 11 ----------------------------------------------------------------------
CriterionResult estimator_oracles(const AcceptanceSettings& s) {
    auto r = start(11, "estimator-oracles");
    r.tolerance = 0.1;
    auto eng = make_engine(criterion_seed(s, 11));
    const std::size_t n = 3000;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    std::vector<double> uni(n);
    std::vector<double> cantor(n);
    for (auto& x : uni) x = u(eng);
    for (auto& x : cantor) {
        x = 0.0;
        double scale = 2.0 / 3.0;
        for (int k = 0; k < 40; ++k, scale /= 3.0)
            if (coin(eng)) x += scale;
    }
    const auto grid = log_space(1e-4, 1e-1, 31);
    const std::vector<double> ones(n, 1.0);
    const auto e_uni = correlation_dimension(LeafSample(uni, ones), grid);
    const auto e_atom = correlation_dimension(LeafSample(std::vector<double>(n, 0.5), ones), grid);
    const auto e_cantor = correlation_dimension(LeafSample(cantor, ones), grid);
    const double d_uni = e_uni.slope;
    const double d_atom = e_atom.slope;
    const double d_cantor = e_cantor.slope;
    const double cantor_ref = std::numbers::ln2 / std::log(3.0);
    const double worst = std::max({std::abs(d_uni - 1.0), std::abs(d_atom), std::abs(d_cantor - cantor_ref)});
    r.measured = worst;
    r.pass = worst <= r.tolerance;
    r.data = {{"uniform", d_uni}, {"atom", d_atom}, {"cantor", d_cantor}, {"cantor_reference", cantor_ref},
              {"raw_slopes", {e_uni.raw_slope, e_atom.raw_slope, e_cantor.raw_slope}}, {"points", n}};
    r.detail = "uniform " + format_double(d_uni) + ", atom " + format_double(d_atom) + ", Cantor " +
               format_double(d_cantor) + " (ref " + format_double(cantor_ref) + ")";
    return r;
}

// --- 12 ----------------------------------------------------------------------
CriterionResult spine_triplet(const AcceptanceSettings&) {
    auto r = start(12, "spine-triplet");
    r.tolerance = 1e-8;
    LevyTriplet two_atoms;
    two_atoms.drift = -2.5;
    two_atoms.gaussian_var = 1.0;
    two_atoms.jumps = FiniteAtoms{{{-std::numbers::ln2, 1.0}, {-1.5, 0.5}, {0.2, 0.3}}};
    double worst = 0.0;
    json rows = json::array();
    for (const auto& [name, triplet, alpha] :
         {std::tuple{"reference", reference_dyadic_triplet(), -0.2}, std::tuple{"three-atom", two_atoms, -0.7}}) {
        const auto m = CumulantModel::from_triplet(triplet, alpha);
        const double dev = verify_spine_triplet(m, build_spine_triplet(m), 1.0);
        worst = std::max(worst, dev);
        rows.push_back({{"model", name}, {"max_deviation", dev}});
    }
    r.measured = worst;
    r.pass = worst < r.tolerance;
    r.data = {{"models", rows}};
    r.detail = "max |phi(q) - kappa(omega- + q)| = " + format_double(worst);
    return r;
}

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceSettings& settings) {
    using Fn = CriterionResult (*)(const AcceptanceSettings&);
    static constexpr Fn table[kCriterionCount] = {boltzmann_roots,  root_oracle,        martingale_mean,
                                                 inverse_moment,   tagged_leaf_law,    self_similarity,
                                                 ac_profile,       singular_dimension, small_time,
                                                 branching_identity, estimator_oracles, spine_triplet};
    if (id < 1 || id > kCriterionCount) throw DomainError("run_criterion: id must be 1..12");
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r = table[id - 1](settings);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceSettings& settings,
                                            const std::function<void(const CriterionResult&)>& on_result) {
    std::vector<CriterionResult> out;
    for (int id = 1; id <= kCriterionCount; ++id) {
        if (!settings.only.empty() && std::find(settings.only.begin(), settings.only.end(), id) == settings.only.end())
            continue;
        CriterionResult r;
        try {
            r = run_criterion(id, settings);
        } catch (const std::exception& e) {
            r.id = id;
            r.name = "criterion-" + std::to_string(id);
            r.pass = false;
            r.detail = std::string("error: ") + e.what();
        }
        if (on_result) on_result(r);
        out.push_back(std::move(r));
    }
    return out;
}

std::string summary_line(const CriterionResult& r) {
    std::ostringstream o;
    o << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << ": " << r.detail << " (" << std::fixed;
    o.precision(1);
    o << r.seconds << " s)";
    return o.str();
}

nlohmann::json acceptance_manifest(const std::vector<CriterionResult>& results, const AcceptanceSettings& settings) {
    json crit = json::array();
    std::size_t passed = 0;
    for (const auto& r : results) {
        if (r.pass) ++passed;
        auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
        crit.push_back({{"id", r.id},
                        {"name", r.name},
                        {"pass", r.pass},
                        {"measured", num(r.measured)},
                        {"target", num(r.target)},
                        {"tolerance", num(r.tolerance)},
                        {"seconds", r.seconds},
                        {"detail", r.detail},
                        {"data", r.data}});
    }
    return {{"settings", {{"seed", settings.seed}, {"threads", settings.threads}, {"scale", settings.scale}}},
            {"criteria", crit},
            {"passed", passed},
            {"failed", results.size() - passed},
            {"all_pass", passed == results.size()}};
}

}  // namespace gfrag

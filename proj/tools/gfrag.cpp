// Command-line front end. Every subcommand reads one config file, writes its
// outputs to --out and echoes the resolved configuration there.
//
// Exit codes: 0 success, 1 acceptance failure, 2 config error,
// 3 model validation error, 4 numerical failure.
#include "gfrag/acceptance.hpp"
#include "gfrag/area.hpp"
#include "gfrag/cellsystem.hpp"
#include "gfrag/config.hpp"
#include "gfrag/cumulant.hpp"
#include "gfrag/dimension.hpp"
#include "gfrag/error.hpp"
#include "gfrag/lamperti.hpp"
#include "gfrag/numeric.hpp"
#include "gfrag/parallel.hpp"
#include "gfrag/random.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gfrag;

namespace {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Context {
    RunConfig config;
    fs::path out;
};

class Csv {
public:
    Csv(const fs::path& path, std::initializer_list<const char*> header) : file_(path) {
        if (!file_) throw ConfigError("cannot write " + path.string());
        bool first = true;
        for (const char* h : header) {
            file_ << (first ? "" : ",") << h;
            first = false;
        }
        file_ << "\n";
    }
    template <class... T>
    void row(const T&... values) {
        bool first = true;
        ((file_ << (first ? "" : ",") << cell(values), first = false), ...);
        file_ << "\n";
    }

private:
    static std::string cell(double x) { return format_double(x); }
    static std::string cell(std::size_t x) { return std::to_string(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    std::ofstream file_;
};

void write_json(const fs::path& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << j.dump(2) << "\n";
}

CumulantModel build_model(const RunConfig& c) {
    try {
        auto m = c.model();
        validate_model(m);
        return m;
    } catch (const Error& e) {
        throw ModelError(e.what());
    }
}

void require_triplet(const CumulantModel& m, const char* command) {
    if (!m.triplet()) throw ModelError(std::string(command) + ": needs a model built from a Levy triplet");
}

json model_json(const CumulantModel& m) {
    const auto rc = regime_classify(m);
    json j = {{"alpha", m.alpha()},
              {"omega_minus", m.omega_minus()},
              {"kappa_prime_at_omega_minus", m.kprime_at_omega_minus()},
              {"regime", to_string(rc.regime)}};
    j["omega_plus"] = m.omega_plus_finite() ? json(m.omega_plus()) : json(nullptr);
    j["predicted_dimension"] = rc.predicted_dimension ? json(*rc.predicted_dimension) : json(nullptr);
    return j;
}

ResidualLifetimeBank make_bank(const CumulantModel& m, const RunConfig& c) {
    return ResidualLifetimeBank::build(m, c.bank_size, derive_seed(c.seed, {stream::bank}), {}, c.threads);
}

const ResidualLifetimeBank* bank_for(const RunConfig& c, const ResidualLifetimeBank& bank) {
    return c.area_mode == AreaMode::SpineExtend ? &bank : nullptr;
}

// ---------------------------------------------------------------------------

int cmd_kappa(const Context& ctx) {
    const auto m = build_model(ctx.config);
    const auto [lo, hi] = kappa_domain(m.source());
    Csv csv(ctx.out / "kappa.csv", {"q", "kappa", "kappa_prime"});
    for (double q : ctx.config.grids.q) {
        if (!(q > lo && q < hi)) continue;
        try {
            csv.row(q, kappa(m, q), kappa_prime(m, q));
        } catch (const DomainError&) {
            // pole of the Boltzmann cumulant; the row is skipped
        }
    }
    const json summary = {{"command", "kappa"}, {"model", model_json(m)}};
    write_json(ctx.out / "summary.json", summary);
    std::cout << "omega- = " << format_double(m.omega_minus()) << "\n"
              << "omega+ = " << (m.omega_plus_finite() ? format_double(m.omega_plus()) : std::string("inf")) << "\n"
              << "regime = " << to_string(regime_classify(m).regime) << "\n";
    return 0;
}

int cmd_simulate(const Context& ctx) {
    const auto& c = ctx.config;
    const auto m = build_model(c);
    require_triplet(m, "simulate");
    const auto sys = build_system(c.root_sizes, m, c.truncation, c.seed, c.threads);
    std::ofstream(ctx.out / "tree.tsv") << export_tree(sys);

    ResidualLifetimeBank bank;
    if (c.area_mode == AreaMode::SpineExtend) bank = make_bank(m, c);
    const auto prof = area_profile(sys, c.area_mode, derive_seed(c.seed, {stream::residual}), bank_for(c, bank));
    Csv atoms(ctx.out / "atoms.csv", {"location", "mass", "start", "size", "record"});
    for (const auto& a : prof.atoms()) atoms.row(a.location, a.mass, a.start, a.size, a.record);
    Csv area(ctx.out / "area.csv", {"t", "A"});
    for (double t : c.grids.t) area.row(t, prof(t));

    json mart = json::array();
    for (std::size_t n = 1; n <= std::min<std::size_t>(3, c.truncation.generation_cap); ++n)
        mart.push_back({{"n", n}, {"value", intrinsic_martingale(sys, n)}});
    const auto& st = sys.stats();
    json status = json::object();
    for (std::size_t k = 0; k < kCellStatusCount; ++k)
        status[to_string(static_cast<CellStatus>(k))] = st.status_counts[k];
    const json summary = {{"command", "simulate"},
                          {"model", model_json(m)},
                          {"records", st.records},
                          {"expanded", st.expanded},
                          {"max_generation", st.max_generation},
                          {"budget_exhausted", st.budget_exhausted},
                          {"status_counts", status},
                          {"area_mode", to_string(c.area_mode)},
                          {"total_area", prof.total_mass()},
                          {"martingale", mart}};
    write_json(ctx.out / "summary.json", summary);
    std::cout << st.records << " cells, total area " << format_double(prof.total_mass()) << "\n";
    return 0;
}

int cmd_spine(const Context& ctx) {
    const auto& c = ctx.config;
    const auto m = build_model(c);
    if (!m.triplet() || !has_finite_atoms(*m.triplet()))
        throw ModelError("spine: needs a triplet model with finitely many atoms");
    const auto spine = build_spine_triplet(m);
    const double dev = verify_spine_triplet(m, spine);
    const auto samples = sample_exp_functional(spine, m.alpha(), c.spine_samples, c.seed, {}, c.threads);
    const auto rep = inverse_moment_check(samples, m);
    Csv s(ctx.out / "spine_samples.csv", {"I"});
    for (double v : samples.values) s.row(v);
    const auto dens = estimate_density_k(samples);
    Csv d(ctx.out / "density.csv", {"x", "k"});
    for (std::size_t i = 0; i < dens.grid.size(); ++i) d.row(dens.grid[i], dens.values[i]);
    json atoms = json::array();
    for (const auto& a : std::get<FiniteAtoms>(spine.jumps).atoms) atoms.push_back({{"location", a.location}, {"rate", a.rate}});
    const json summary = {{"command", "spine"},
                          {"model", model_json(m)},
                          {"spine_triplet", {{"drift", spine.drift}, {"gaussian_var", spine.gaussian_var}, {"atoms", atoms}}},
                          {"triplet_identity_max_deviation", dev},
                          {"inverse_moment",
                           {{"estimate", rep.estimate}, {"std_error", rep.std_error}, {"reference", rep.reference},
                            {"z", rep.z_score}, {"n", rep.n}, {"low_power", rep.low_power}, {"pass", rep.pass}}},
                          {"density_mass", density_mass(dens)},
                          {"density_bandwidth", dens.bandwidth}};
    write_json(ctx.out / "summary.json", summary);
    std::cout << "mean(1/I) = " << format_double(rep.estimate) << " +- " << format_double(rep.std_error)
              << " (reference " << format_double(rep.reference) << ")\n";
    return 0;
}

struct Ensemble {
    std::vector<AreaProfile> profiles;
    FragmentStats stats;
};

Ensemble simulate_ensemble(const CumulantModel& m, const RunConfig& c, bool with_stats) {
    auto p = c.truncation;
    if (with_stats) p.snapshot_times = c.grids.t;
    ResidualLifetimeBank bank;
    if (c.area_mode == AreaMode::SpineExtend) bank = make_bank(m, c);
    Ensemble e;
    e.profiles.resize(c.replicas);
    std::vector<FragmentStats> per(with_stats ? c.replicas : 0);
    parallel_for(c.replicas, c.threads, [&](std::size_t i) {
        const auto sys = build_system(c.root_sizes, m, p, replica_seed(c.seed, 0, i));
        e.profiles[i] = area_profile(sys, c.area_mode, replica_seed(c.seed, 1, i), bank_for(c, bank));
        if (with_stats) per[i] = fragment_stats(sys, c.grids.t, c.grids.eps, &e.profiles[i]);
    });
    if (with_stats) {
        e.stats = per.front();
        for (std::size_t i = 1; i < per.size(); ++i) e.stats += per[i];
    }
    return e;
}

int cmd_profile(const Context& ctx) {
    const auto& c = ctx.config;
    const auto m = build_model(c);
    require_triplet(m, "profile");
    const auto e = simulate_ensemble(m, c, true);
    const double n = static_cast<double>(e.stats.systems);
    Csv fs_csv(ctx.out / "fragment_stats.csv", {"t", "eps", "M", "N"});
    for (std::size_t ti = 0; ti < e.stats.t_grid.size(); ++ti)
        for (std::size_t ei = 0; ei < e.stats.eps_grid.size(); ++ei)
            fs_csv.row(e.stats.t_grid[ti], e.stats.eps_grid[ei], e.stats.m_at(ti, ei) / n, e.stats.n_at(ti, ei) / n);
    Csv area(ctx.out / "area_grid.csv", {"t", "mean_A", "std_error"});
    for (double t : c.grids.t) {
        std::vector<double> v;
        for (const auto& p : e.profiles) v.push_back(p(t));
        const auto est = mean_and_se(v);
        area.row(t, est.mean, est.std_error);
    }
    auto opt = c.profile;
    std::tie(opt.interior_lo, opt.interior_hi) = interior_range(e.profiles);
    const auto est = profile_estimate(e.stats, m, opt);
    Csv pe(ctx.out / "profile_estimate.csv",
           {"t", "estimated", "window_points", "eps_lo", "eps_hi", "m_slope", "m_slope_se", "n_slope", "n_slope_se",
            "n_low_slope", "a_from_m", "a_from_n", "n_offset", "a_from_n_raw", "small_eps_ratio"});
    for (const auto& p : est.points)
        pe.row(p.t, static_cast<int>(p.estimated), p.window_points, p.eps_lo, p.eps_hi, p.m_slope, p.m_slope_se,
               p.n_slope, p.n_slope_se, p.n_low_slope, p.a_from_m, p.a_from_n, p.n_offset, p.a_from_n_raw,
               p.small_eps_ratio);
    RegimeEvidence ev;
    ev.profile = est;
    ev.n_stable_slope = c.n_stable_slope;
    json summary = regime_report(m, ev);
    summary["command"] = "profile";
    summary["interior"] = {opt.interior_lo, opt.interior_hi};
    summary["replicas"] = c.replicas;
    write_json(ctx.out / "summary.json", summary);
    std::cout << "regime " << summary["prediction"]["regime"].get<std::string>() << ", evidence consistent: "
              << (summary["consistent"].get<bool>() ? "yes" : "no") << "\n";
    return 0;
}

int cmd_dimension(const Context& ctx) {
    const auto& c = ctx.config;
    const auto m = build_model(c);
    require_triplet(m, "dimension");
    const auto e = simulate_ensemble(m, c, false);
    LeafSample sample;
    for (const auto& p : e.profiles) sample.add_profile(p);

    RegimeEvidence ev;
    ev.n_stable_slope = c.n_stable_slope;
    std::optional<std::pair<double, double>> window;
    if (c.window_lo) window = std::make_pair(*c.window_lo, *c.window_hi);
    const auto dim = correlation_dimension(sample, c.grids.r, m, window);
    ev.dimension = dim;
    Csv corr(ctx.out / "correlation.csv", {"r", "C_hat"});
    for (std::size_t k = 0; k < dim.curve.r.size(); ++k) corr.row(dim.curve.r[k], dim.curve.c[k]);

    const auto energy = energy_report(sample, c.grids.b, derive_seed(c.seed, {stream::aux, 1}));
    ev.energy = energy;
    Csv en(ctx.out / "energy.csv", {"b", "I_hat", "I_hat_half", "relative_change", "stable"});
    for (const auto& r : energy.rows) en.row(r.b, r.full, r.half, r.relative_change, static_cast<int>(r.stable));

    if (m.triplet() && has_finite_atoms(*m.triplet())) {
        const auto bank = make_bank(m, c);
        const auto pairs = tagged_leaf_pairs(m, c.truncation, bank, c.dimension_systems, c.pairs_per_system,
                                             derive_seed(c.seed, {stream::aux, 2}), c.threads);
        const auto four = fourier_pair_diagnostic(pairs, c.grids.theta);
        ev.fourier = four;
        Csv fo(ctx.out / "fourier.csv", {"theta", "re", "im", "re_se", "im_se"});
        for (const auto& r : four.rows) fo.row(r.theta, r.re, r.im, r.re_se, r.im_se);
    }
    json summary = regime_report(m, ev);
    summary["command"] = "dimension";
    summary["points"] = sample.size();
    write_json(ctx.out / "summary.json", summary);
    std::cout << "correlation dimension " << format_double(dim.slope);
    if (dim.reference) std::cout << " (predicted " << format_double(*dim.reference) << ")";
    std::cout << "\n";
    return 0;
}

int cmd_check_all(const Context& ctx) {
    const auto& c = ctx.config;
    AcceptanceSettings s;
    s.seed = c.seed;
    s.threads = c.threads;
    s.scale = c.acceptance_scale;
    s.only = c.only;
    const auto results = run_acceptance(s, [](const CriterionResult& r) { std::cout << summary_line(r) << std::endl; });
    const auto manifest = acceptance_manifest(results, s);
    write_json(ctx.out / "manifest.json", manifest);
    std::cout << manifest["passed"].get<std::size_t>() << "/" << results.size() << " criteria passed\n";
    return manifest["all_pass"].get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Growth-fragmentation simulator"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    app.add_option("--config", config_path, "Configuration file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--seed", seed, "Override run.seed");
    app.add_option("--threads", threads, "Override run.threads");

    using Handler = int (*)(const Context&);
    const std::vector<std::tuple<const char*, const char*, Handler>> commands = {
        {"kappa", "Cumulant roots and regime", cmd_kappa},
        {"simulate", "One cell system: tree export and area atoms", cmd_simulate},
        {"spine", "Spine triplet and exponential functional samples", cmd_spine},
        {"profile", "Fragment statistics and density estimates of A", cmd_profile},
        {"dimension", "Energies, correlation dimension and Fourier diagnostic", cmd_dimension},
        {"check-all", "Run the acceptance suite and write a manifest", cmd_check_all}};
    for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        ConfigFile file = config_path.empty() ? ConfigFile::parse("") : ConfigFile::load(config_path);
        if (seed) file.set("run.seed", std::to_string(*seed));
        if (threads) file.set("run.threads", std::to_string(*threads));
        Context ctx{load_run_config(file), out_dir};
        fs::create_directories(ctx.out);
        std::ofstream(ctx.out / "config.resolved") << ctx.config.echo();
        for (const auto& [name, help, fn] : commands)
            if (app.got_subcommand(name)) return fn(ctx);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationFailure& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

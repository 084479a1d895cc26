#include "gfrag/config.hpp"

#include "gfrag/error.hpp"
#include "gfrag/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gfrag {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool valid_name(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
    });
}

std::optional<double> to_double(const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    if (b != e && *b == '+') ++b;
    const auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) return std::nullopt;
    return v;
}

std::vector<std::string> split_commas(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(',', start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_double(v[i]);
    }
    return out;
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text, std::string source) {
    ConfigFile cfg;
    cfg.source_ = std::move(source);
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(raw.substr(0, hash));
        if (line.empty()) continue;
        const std::string where = cfg.source_ + ":" + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "unterminated section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!valid_name(section)) throw ConfigError(where + "invalid section name '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (!valid_name(key)) throw ConfigError(where + "invalid key '" + key + "'");
        if (value.empty()) throw ConfigError(where + "empty value for '" + key + "'");
        const std::string full = section.empty() ? key : section + "." + key;
        if (cfg.entries_.count(full)) throw ConfigError(where + "duplicate key '" + full + "'");
        cfg.entries_[full] = Entry{value, line_no, false};
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void ConfigFile::set(const std::string& key, std::string value) {
    auto it = entries_.find(key);
    const std::size_t line = it == entries_.end() ? 0 : it->second.line;
    entries_[key] = Entry{std::move(value), line, false};
}

const ConfigFile::Entry* ConfigFile::find(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
}

void ConfigFile::fail(const Entry& e, const std::string& key, const std::string& what) const {
    const std::string where = e.line ? source_ + ":" + std::to_string(e.line) : std::string("<override>");
    throw ConfigError(where + ": " + key + ": " + what + " (got '" + e.value + "')");
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
    const Entry* e = find(key);
    return e ? e->value : fallback;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
    const auto v = get_optional_double(key);
    return v ? *v : fallback;
}

std::optional<double> ConfigFile::get_optional_double(const std::string& key) const {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    const auto v = to_double(e->value);
    if (!v) fail(*e, key, "expected a number");
    return v;
}

std::uint64_t ConfigFile::get_uint(const std::string& key, std::uint64_t fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc() || p != e->value.data() + e->value.size()) fail(*e, key, "expected a nonnegative integer");
    return v;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    if (e->value == "true") return true;
    if (e->value == "false") return false;
    fail(*e, key, "expected true or false");
}

std::vector<double> ConfigFile::get_list(const std::string& key, const std::vector<double>& fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    const std::string& v = e->value;
    for (const char* fn : {"lin", "log"}) {
        const std::string prefix = std::string(fn) + "(";
        if (v.rfind(prefix, 0) != 0) continue;
        if (v.back() != ')') fail(*e, key, "unterminated generator");
        const auto args = split_commas(std::string_view(v).substr(prefix.size(), v.size() - prefix.size() - 1));
        if (args.size() != 3) fail(*e, key, std::string(fn) + "(lo, hi, n) takes three arguments");
        const auto lo = to_double(args[0]);
        const auto hi = to_double(args[1]);
        const auto n = to_double(args[2]);
        if (!lo || !hi || !n || *n < 2 || *n != std::floor(*n)) fail(*e, key, "bad generator arguments");
        if (std::string(fn) == "log" && !(*lo > 0 && *hi > 0)) fail(*e, key, "log grid needs positive bounds");
        const auto count = static_cast<std::size_t>(*n);
        return std::string(fn) == "lin" ? lin_space(*lo, *hi, count) : log_space(*lo, *hi, count);
    }
    std::vector<double> out;
    for (const auto& item : split_commas(v)) {
        const auto x = to_double(item);
        if (!x) fail(*e, key, "expected a comma-separated list of numbers");
        out.push_back(*x);
    }
    return out;
}

void ConfigFile::reject_unused() const {
    for (const auto& [key, e] : entries_)
        if (!e.used) fail(e, key, "unknown key");
}

// ---------------------------------------------------------------------------

CumulantModel RunConfig::model() const {
    if (family == "boltzmann") return CumulantModel::boltzmann(theta);
    return CumulantModel::from_triplet(triplet, alpha);
}

RunConfig load_run_config(const ConfigFile& f) {
    RunConfig c;
    c.family = f.get_string("model.family", c.family);
    if (c.family != "triplet" && c.family != "boltzmann")
        throw ConfigError("model.family must be 'triplet' or 'boltzmann', got '" + c.family + "'");
    c.theta = f.get_double("model.theta", c.theta);
    c.alpha = c.family == "boltzmann" ? 1.0 - c.theta : f.get_double("model.alpha", c.alpha);
    if (c.family == "triplet") {
        c.triplet.drift = f.get_double("model.drift", c.triplet.drift);
        c.triplet.gaussian_var = f.get_double("model.gaussian_var", c.triplet.gaussian_var);
        FiniteAtoms atoms = std::get<FiniteAtoms>(c.triplet.jumps);
        std::vector<double> locs;
        std::vector<double> rates;
        for (const auto& a : atoms.atoms) {
            locs.push_back(a.location);
            rates.push_back(a.rate);
        }
        locs = f.get_list("model.jump_locations", locs);
        rates = f.get_list("model.jump_rates", rates);
        if (locs.size() != rates.size())
            throw ConfigError("model.jump_locations and model.jump_rates differ in length");
        atoms.atoms.clear();
        for (std::size_t i = 0; i < locs.size(); ++i) atoms.atoms.push_back({locs[i], rates[i]});
        c.triplet.jumps = atoms;
    }

    auto& p = c.truncation;
    p.size_floor = f.get_double("truncation.size_floor", p.size_floor);
    p.generation_cap = f.get_uint("truncation.generation_cap", p.generation_cap);
    p.time_horizon = f.get_double("truncation.time_horizon", p.time_horizon);
    p.cell_budget = f.get_uint("truncation.cell_budget", p.cell_budget);
    p.path_step = f.get_double("truncation.path_step", p.path_step);
    p.checkpoint_stride = f.get_uint("truncation.checkpoint_stride", p.checkpoint_stride);
    p.absorption.stop_cutoff = f.get_double("truncation.stop_cutoff", p.absorption.stop_cutoff);
    try {
        p.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("truncation: ") + e.what());
    }

    c.seed = f.get_uint("run.seed", c.seed);
    c.threads = static_cast<unsigned>(f.get_uint("run.threads", c.threads));
    if (c.threads == 0) throw ConfigError("run.threads must be >= 1");
    c.replicas = f.get_uint("run.replicas", c.replicas);
    if (c.replicas == 0) throw ConfigError("run.replicas must be >= 1");
    c.root_sizes = f.get_list("run.root_sizes", c.root_sizes);

    c.spine_samples = f.get_uint("spine.samples", c.spine_samples);
    c.bank_size = f.get_uint("spine.bank_size", c.bank_size);
    if (c.bank_size == 0) throw ConfigError("spine.bank_size must be >= 1");

    auto& g = c.grids;
    g.q = f.get_list("grids.q", lin_space(0.05, 5.0, 100));
    g.t = f.get_list("grids.t", lin_space(0.2, 3.0, 15));
    g.eps = f.get_list("grids.eps", log_space(p.size_floor, 1.0, 41));
    g.b = f.get_list("grids.b", {0.1, 0.25, 0.5, 0.75, 1.0});
    g.r = f.get_list("grids.r", log_space(1e-7, 1.0, 36));
    g.theta = f.get_list("grids.theta", {0.0, 1.0, 10.0, 50.0, 200.0});

    const std::string mode = f.get_string("profile.area_mode", "spine_extend");
    if (mode == "spine_extend") c.area_mode = AreaMode::SpineExtend;
    else if (mode == "freeze") c.area_mode = AreaMode::Freeze;
    else throw ConfigError("profile.area_mode must be 'spine_extend' or 'freeze', got '" + mode + "'");
    c.profile.lower_factor = f.get_double("profile.lower_factor", c.profile.lower_factor);
    c.profile.upper_factor = f.get_double("profile.upper_factor", c.profile.upper_factor);

    c.dimension_systems = f.get_uint("dimension.systems", c.dimension_systems);
    c.pairs_per_system = f.get_uint("dimension.pairs_per_system", c.pairs_per_system);
    c.window_lo = f.get_optional_double("dimension.window_lo");
    c.window_hi = f.get_optional_double("dimension.window_hi");
    if (c.window_lo.has_value() != c.window_hi.has_value())
        throw ConfigError("dimension.window_lo and dimension.window_hi must be given together");
    c.n_stable_slope = f.get_double("dimension.n_stable_slope", c.n_stable_slope);

    for (double id : f.get_list("acceptance.only", {})) {
        if (id != std::floor(id) || id < 1 || id > 12) throw ConfigError("acceptance.only: ids are 1..12");
        c.only.push_back(static_cast<int>(id));
    }
    c.acceptance_scale = f.get_double("acceptance.scale", c.acceptance_scale);
    if (!(c.acceptance_scale > 0.0)) throw ConfigError("acceptance.scale must be > 0");

    f.reject_unused();
    return c;
}

std::string RunConfig::echo() const {
    std::ostringstream o;
    o << "[model]\nfamily = " << family << "\n";
    if (family == "boltzmann") {
        o << "theta = " << format_double(theta) << "\n";
    } else {
        o << "alpha = " << format_double(alpha) << "\n"
          << "drift = " << format_double(triplet.drift) << "\n"
          << "gaussian_var = " << format_double(triplet.gaussian_var) << "\n";
        std::vector<double> locs;
        std::vector<double> rates;
        for (const auto& a : std::get<FiniteAtoms>(triplet.jumps).atoms) {
            locs.push_back(a.location);
            rates.push_back(a.rate);
        }
        if (!locs.empty())
            o << "jump_locations = " << join(locs) << "\njump_rates = " << join(rates) << "\n";
    }
    const auto& p = truncation;
    o << "\n[truncation]\nsize_floor = " << format_double(p.size_floor) << "\ngeneration_cap = " << p.generation_cap
      << "\ntime_horizon = " << format_double(p.time_horizon) << "\ncell_budget = " << p.cell_budget
      << "\npath_step = " << format_double(p.path_step) << "\ncheckpoint_stride = " << p.checkpoint_stride
      << "\nstop_cutoff = " << format_double(p.absorption.stop_cutoff) << "\n";
    o << "\n[run]\nseed = " << seed << "\nthreads = " << threads << "\nreplicas = " << replicas
      << "\nroot_sizes = " << join(root_sizes) << "\n";
    o << "\n[spine]\nsamples = " << spine_samples << "\nbank_size = " << bank_size << "\n";
    o << "\n[grids]\nq = " << join(grids.q) << "\nt = " << join(grids.t) << "\neps = " << join(grids.eps)
      << "\nb = " << join(grids.b) << "\nr = " << join(grids.r) << "\ntheta = " << join(grids.theta) << "\n";
    o << "\n[profile]\narea_mode = " << (area_mode == AreaMode::Freeze ? "freeze" : "spine_extend") << "\nlower_factor = " << format_double(profile.lower_factor)
      << "\nupper_factor = " << format_double(profile.upper_factor) << "\n";
    o << "\n[dimension]\nsystems = " << dimension_systems << "\npairs_per_system = " << pairs_per_system << "\n";
    if (window_lo) o << "window_lo = " << format_double(*window_lo) << "\nwindow_hi = " << format_double(*window_hi) << "\n";
    o << "n_stable_slope = " << format_double(n_stable_slope) << "\n";
    o << "\n[acceptance]\nscale = " << format_double(acceptance_scale) << "\n";
    if (!only.empty()) {
        o << "only = ";
        for (std::size_t i = 0; i < only.size(); ++i) o << (i ? ", " : "") << only[i];
        o << "\n";
    }
    return o.str();
}

}  // namespace gfrag

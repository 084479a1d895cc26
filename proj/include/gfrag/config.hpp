#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gfrag/area.hpp"
#include "gfrag/cellsystem.hpp"
#include "gfrag/cumulant.hpp"

namespace gfrag {

/// Key-value text file with dotted sections:
///
///     # comment
///     [truncation]
///     size_floor = 1e-6
///     [grids]
///     t = lin(0.2, 3, 15)
///     eps = 1e-6, 1e-5, 1e-4
///
/// Keys are addressed as "section.key". Every error names the line.
class ConfigFile {
public:
    static ConfigFile parse(std::string_view text, std::string source = "<config>");
    static ConfigFile load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    /// Sets or replaces a key (command-line overrides).
    void set(const std::string& key, std::string value);

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::optional<double> get_optional_double(const std::string& key) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma list, lin(lo, hi, n) or log(lo, hi, n).
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

    /// Throws ConfigError naming the first key that no getter has read.
    void reject_unused() const;

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
        mutable bool used = false;
    };
    const Entry* find(const std::string& key) const;
    [[noreturn]] void fail(const Entry& e, const std::string& key, const std::string& what) const;

    std::map<std::string, Entry> entries_;
    std::string source_;
};

struct GridSettings {
    std::vector<double> q;      ///< kappa table
    std::vector<double> t;      ///< profile times
    std::vector<double> eps;    ///< fragment-size thresholds
    std::vector<double> b;      ///< energy exponents
    std::vector<double> r;      ///< correlation radii
    std::vector<double> theta;  ///< Fourier frequencies
};

struct RunConfig {
    std::string family = "triplet";  ///< triplet | boltzmann
    double theta = 1.5;
    LevyTriplet triplet = reference_dyadic_triplet();
    double alpha = -0.2;

    TruncationPolicy truncation;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::size_t replicas = 100;
    std::vector<double> root_sizes{1.0};

    std::size_t spine_samples = 100'000;
    std::size_t bank_size = kDefaultBankSize;

    GridSettings grids;

    AreaMode area_mode = AreaMode::SpineExtend;
    ProfileEstimateOptions profile;

    std::size_t dimension_systems = 400;
    std::size_t pairs_per_system = 4;
    std::optional<double> window_lo;
    std::optional<double> window_hi;
    double n_stable_slope = 0.02;

    /// Criterion ids to run with check-all (empty = all).
    std::vector<int> only;
    /// Multiplies every replica count of check-all (1 = the pinned values).
    double acceptance_scale = 1.0;

    /// Builds the model (throws ValidationFailure / DomainError on bad models).
    CumulantModel model() const;
    /// The resolved configuration in the input grammar.
    std::string echo() const;
};

/// Reads every known key (defaults for absent ones) and rejects unknown keys.
RunConfig load_run_config(const ConfigFile& file);

}  // namespace gfrag

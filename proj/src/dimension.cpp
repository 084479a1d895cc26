#include "gfrag/dimension.hpp"

#include "gfrag/error.hpp"
#include "gfrag/numeric.hpp"
#include "gfrag/parallel.hpp"
#include "gfrag/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gfrag {

namespace {

// Group-normalised weights of group g.
std::vector<double> group_weights(std::span<const double> w) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<double> out(w.begin(), w.end());
    if (total > 0.0)
        for (double& x : out) x /= total;
    return out;
}

template <class Fn>
double group_average(const LeafSample& s, Fn&& per_group) {
    const std::size_t g_count = s.groups();
    if (g_count == 0) throw InsufficientData("leaf sample is empty");
    double acc = 0.0;
    for (std::size_t g = 0; g < g_count; ++g) {
        const std::size_t b = s.group_begin(g);
        const std::size_t e = s.group_begin(g + 1);
        acc += per_group(s.lifetimes().subspan(b, e - b), group_weights(s.weights().subspan(b, e - b)));
    }
    return acc / static_cast<double>(g_count);
}

}  // namespace

// ---------------------------------------------------------------------------
// LeafSample

LeafSample::LeafSample(std::vector<double> lifetimes, std::vector<double> weights) {
    add_group(lifetimes, weights);
}

void LeafSample::add_profile(const AreaProfile& profile) {
    std::vector<double> t;
    std::vector<double> w;
    for (const auto& a : profile.atoms()) {
        if (!(a.mass > 0.0)) continue;
        t.push_back(a.location);
        w.push_back(a.mass);
    }
    add_group(t, w);
}

void LeafSample::add_group(std::span<const double> lifetimes, std::span<const double> weights) {
    if (lifetimes.size() != weights.size()) throw DomainError("leaf sample: lifetimes and weights differ in length");
    if (lifetimes.empty()) return;
    std::vector<std::size_t> order(lifetimes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lifetimes[a] < lifetimes[b]; });
    for (std::size_t i : order) {
        if (!(lifetimes[i] >= 0.0) || !std::isfinite(lifetimes[i])) throw DomainError("leaf sample: lifetimes must be >= 0");
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) throw DomainError("leaf sample: weights must be > 0");
        lifetimes_.push_back(lifetimes[i]);
        weights_.push_back(weights[i]);
    }
    offsets_.push_back(lifetimes_.size());
    normalized_ = false;
}

void LeafSample::normalize() {
    const double share = 1.0 / static_cast<double>(groups());
    for (std::size_t g = 0; g < groups(); ++g) {
        const auto b = weights_.begin() + static_cast<std::ptrdiff_t>(offsets_[g]);
        const auto e = weights_.begin() + static_cast<std::ptrdiff_t>(offsets_[g + 1]);
        const double total = std::accumulate(b, e, 0.0);
        for (auto it = b; it != e; ++it) *it *= share / total;
    }
    normalized_ = true;
}

LeafSample LeafSample::half(std::uint64_t seed) const {
    LeafSample out;
    for (std::size_t g = 0; g < groups(); ++g) {
        std::vector<double> t;
        std::vector<double> w;
        for (std::size_t i = offsets_[g]; i < offsets_[g + 1]; ++i) {
            if (mix64(derive_seed(seed, {stream::aux, i})) & 1U) continue;
            t.push_back(lifetimes_[i]);
            w.push_back(weights_[i]);
        }
        if (t.size() < 2) {
            t.assign(lifetimes_.begin() + static_cast<std::ptrdiff_t>(offsets_[g]),
                     lifetimes_.begin() + static_cast<std::ptrdiff_t>(offsets_[g + 1]));
            w.assign(weights_.begin() + static_cast<std::ptrdiff_t>(offsets_[g]),
                     weights_.begin() + static_cast<std::ptrdiff_t>(offsets_[g + 1]));
        }
        out.add_group(t, w);
    }
    if (normalized_) out.normalize();
    return out;
}

// ---------------------------------------------------------------------------
// Energies

EnergyValue b_energy(const LeafSample& sample, double b, double clamp, std::size_t min_points) {
    if (!(b > 0.0 && b <= 1.0)) throw DomainError("b_energy: b must lie in (0, 1]");
    if (!(clamp > 0.0)) throw DomainError("b_energy: clamp must be > 0");
    if (sample.size() < std::max<std::size_t>(min_points, 2)) throw InsufficientData("b_energy: too few points");
    const auto t = sample.lifetimes();
    if (std::all_of(t.begin(), t.end(), [&](double x) { return x == t.front(); }))
        throw InsufficientData("b_energy: all lifetimes are equal");
    EnergyValue ev;
    ev.value = group_average(sample, [&](std::span<const double> z, const std::vector<double>& w) {
        double acc = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i)
            for (std::size_t j = i + 1; j < z.size(); ++j) {
                double gap = z[j] - z[i];
                if (gap < clamp) {
                    gap = clamp;
                    ++ev.clamped_pairs;
                }
                acc += w[i] * w[j] * std::pow(gap, -b);
            }
        return 2.0 * acc;
    });
    return ev;
}

EnergyReport energy_report(const LeafSample& sample, std::span<const double> b_grid, std::uint64_t seed,
                           double tolerance) {
    EnergyReport rep;
    rep.tolerance = tolerance;
    const LeafSample sub = sample.half(seed);
    for (double b : b_grid) {
        EnergyRow row;
        row.b = b;
        const auto full = b_energy(sample, b);
        row.full = full.value;
        row.clamped_pairs = full.clamped_pairs;
        row.half = b_energy(sub, b).value;
        row.relative_change = row.half > 0.0 ? row.full / row.half - 1.0 : std::numeric_limits<double>::infinity();
        row.stable = std::abs(row.relative_change) < tolerance;
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Correlation dimension

CorrelationCurve correlation_integral(const LeafSample& sample, std::span<const double> r_grid) {
    CorrelationCurve cc;
    cc.r.assign(r_grid.begin(), r_grid.end());
    std::sort(cc.r.begin(), cc.r.end());
    cc.c.assign(cc.r.size(), 0.0);
    const std::size_t g_count = sample.groups();
    if (g_count == 0) throw InsufficientData("correlation_integral: empty sample");
    for (std::size_t g = 0; g < g_count; ++g) {
        const std::size_t b = sample.group_begin(g);
        const std::size_t e = sample.group_begin(g + 1);
        const auto z = sample.lifetimes().subspan(b, e - b);
        const auto w = group_weights(sample.weights().subspan(b, e - b));
        std::vector<double> prefix(w.size() + 1, 0.0);
        for (std::size_t i = 0; i < w.size(); ++i) prefix[i + 1] = prefix[i] + w[i];
        for (std::size_t k = 0; k < cc.r.size(); ++k) {
            const double r = cc.r[k];
            double acc = 0.0;
            std::size_t hi = 0;
            for (std::size_t i = 0; i < z.size(); ++i) {
                hi = std::max(hi, i + 1);
                while (hi < z.size() && z[hi] - z[i] < r) ++hi;
                acc += w[i] * (prefix[hi] - prefix[i + 1]);
            }
            cc.c[k] += 2.0 * acc / static_cast<double>(g_count);
        }
    }
    return cc;
}

DimensionEstimate correlation_dimension(const LeafSample& sample, std::span<const double> r_grid,
                                        std::optional<std::pair<double, double>> window) {
    if (sample.size() < kMinDimensionPoints) throw InsufficientData("correlation_dimension: need at least 1000 points");
    if (r_grid.size() < 3) throw InsufficientData("correlation_dimension: r grid too short");
    const auto [mn, mx] = std::minmax_element(r_grid.begin(), r_grid.end());
    if (!(*mn > 0.0) || *mx / *mn < 100.0 * (1.0 - 1e-9))
        throw InsufficientData("correlation_dimension: r grid must span at least two decades");
    DimensionEstimate est;
    est.curve = correlation_integral(sample, r_grid);
    if (window) {
        est.window_lo = window->first;
        est.window_hi = window->second;
    } else {
        const double centre = std::sqrt(*mn * *mx);
        est.window_lo = centre / std::sqrt(10.0);
        est.window_hi = centre * std::sqrt(10.0);
    }
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t k = 0; k < est.curve.r.size(); ++k) {
        const double r = est.curve.r[k];
        if (r < est.window_lo * (1 - 1e-12) || r > est.window_hi * (1 + 1e-12) || !(est.curve.c[k] > 0.0)) continue;
        x.push_back(std::log(r));
        y.push_back(std::log(est.curve.c[k]));
    }
    est.points = x.size();
    if (x.size() < 2) throw InsufficientData("correlation_dimension: no pairs within the fit window");
    const auto fit = least_squares(x, y);
    est.raw_slope = fit.slope;
    est.std_error = fit.slope_se;
    est.slope = std::clamp(fit.slope, 0.0, 1.0);
    return est;
}

DimensionEstimate correlation_dimension(const LeafSample& sample, std::span<const double> r_grid,
                                        const CumulantModel& model, std::optional<std::pair<double, double>> window) {
    auto est = correlation_dimension(sample, r_grid, window);
    const auto rc = regime_classify(model);
    if (rc.regime == Regime::SingularDimKnown) est.reference = rc.predicted_dimension;
    return est;
}

// ---------------------------------------------------------------------------
// Fourier diagnostic

LeafPairs tagged_leaf_pairs(const CumulantModel& model, const TruncationPolicy& policy, const ResidualLifetimeBank& bank,
                            std::size_t n_systems, std::size_t pairs_per_system, std::uint64_t seed, unsigned threads) {
    if (n_systems == 0 || pairs_per_system == 0) throw DomainError("tagged_leaf_pairs: counts must be >= 1");
    LeafPairs out;
    out.differences.resize(n_systems * pairs_per_system);
    out.weights.resize(out.differences.size());
    parallel_for(n_systems, threads, [&](std::size_t r) {
        const auto sys = build_system(1.0, model, policy, replica_seed(seed, 9, r));
        const auto prof = area_profile(sys, AreaMode::SpineExtend, replica_seed(seed, 10, r), &bank);
        const LeafTagger tagger(sys, prof);
        const double m = prof.total_mass();
        for (std::size_t k = 0; k < pairs_per_system; ++k) {
            const double a = tagger.tag(derive_seed(seed, {stream::tag, r, 2 * k})).lifetime;
            const double b = tagger.tag(derive_seed(seed, {stream::tag, r, 2 * k + 1})).lifetime;
            out.differences[r * pairs_per_system + k] = a - b;
            out.weights[r * pairs_per_system + k] = m * m;
        }
    });
    return out;
}

FourierTable fourier_pair_diagnostic(const LeafPairs& pairs, std::span<const double> theta_grid) {
    const auto& d = pairs.differences;
    if (d.empty() || pairs.weights.size() != d.size()) throw InsufficientData("fourier_pair_diagnostic: no pairs");
    const double total = std::accumulate(pairs.weights.begin(), pairs.weights.end(), 0.0);
    if (!(total > 0.0)) throw InsufficientData("fourier_pair_diagnostic: zero total weight");
    FourierTable tab;
    double largest = -1.0;
    for (double theta : theta_grid) {
        FourierRow row;
        row.theta = theta;
        if (theta == 0.0) {
            row.re = 1.0;
        } else {
            double re = 0.0;
            double im = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                re += pairs.weights[i] * std::cos(theta * d[i]);
                im += pairs.weights[i] * std::sin(theta * d[i]);
            }
            row.re = re / total;
            row.im = im / total;
            double vr = 0.0;
            double vi = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                const double w = pairs.weights[i] / total;
                vr += w * w * std::pow(std::cos(theta * d[i]) - row.re, 2);
                vi += w * w * std::pow(std::sin(theta * d[i]) - row.im, 2);
            }
            row.re_se = std::sqrt(vr);
            row.im_se = std::sqrt(vi);
        }
        if (std::abs(theta) >= largest) {
            largest = std::abs(theta);
            tab.tail = row.re;
        }
        tab.rows.push_back(row);
    }
    return tab;
}

// ---------------------------------------------------------------------------
// Consolidated report

namespace {

nlohmann::json finite_or_null(double x) {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json regime_report(const CumulantModel& model, const RegimeEvidence& evidence) {
    using nlohmann::json;
    const auto rc = regime_classify(model);
    const double alpha = model.alpha();
    json out;
    out["model"] = {{"alpha", alpha},
                    {"omega_minus", model.omega_minus()},
                    {"omega_plus", finite_or_null(model.omega_plus())},
                    {"kappa_prime_at_omega_minus", model.kprime_at_omega_minus()}};
    const bool ac = rc.regime == Regime::AbsolutelyContinuous;
    json pred = {{"regime", to_string(rc.regime)},
                 {"absolutely_continuous", ac},
                 {"fragments_with_positive_mass", ac ? "infinite" : "finite"},
                 {"lower_bound_literal_reading", rc.lower_bound_literal_reading},
                 {"lower_bound_corrected_reading", rc.lower_bound_corrected_reading}};
    pred["predicted_dimension"] = rc.predicted_dimension ? json(*rc.predicted_dimension) : json(nullptr);
    pred["dimension_lower_bound"] = rc.dimension_lower_bound ? json(*rc.dimension_lower_bound) : json(nullptr);
    if (ac) pred["m_slope"] = -alpha;
    out["prediction"] = pred;

    json ev = json::object();
    std::vector<bool> agrees;
    if (evidence.profile) {
        const auto& pe = *evidence.profile;
        json pts = json::array();
        std::vector<double> ms;
        std::vector<double> ns;
        for (const auto& p : pe.points) {
            if (!p.estimated) continue;
            ms.push_back(p.m_slope);
            ns.push_back(p.n_low_slope);
            pts.push_back({{"t", p.t},
                           {"m_slope", p.m_slope},
                           {"n_slope", p.n_slope},
                           {"n_low_slope", p.n_low_slope},
                           {"a_from_m", p.a_from_m},
                           {"a_from_n", p.a_from_n},
                           {"small_eps_ratio", p.small_eps_ratio}});
        }
        json pj = {{"points", pts}, {"converges", pe.converges}};
        if (!ms.empty()) {
            const double mean_m = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
            const double mean_n = std::accumulate(ns.begin(), ns.end(), 0.0) / static_cast<double>(ns.size());
            const bool stabilizes = mean_n > -evidence.n_stable_slope;
            pj["mean_m_slope"] = mean_m;
            pj["mean_n_low_slope"] = mean_n;
            pj["n_behaviour"] = stabilizes ? "stabilizes" : "diverges";
            agrees.push_back(stabilizes != ac);
            if (ac) agrees.push_back(std::abs(mean_m + alpha) <= 0.1);
        }
        ev["profile"] = pj;
    }
    if (evidence.dimension) {
        const auto& d = *evidence.dimension;
        json dj = {{"slope", d.slope},
                   {"raw_slope", d.raw_slope},
                   {"std_error", d.std_error},
                   {"window", {d.window_lo, d.window_hi}},
                   {"points", d.points}};
        dj["reference"] = d.reference ? json(*d.reference) : json(nullptr);
        if (d.reference) agrees.push_back(std::abs(d.slope - *d.reference) <= 0.15);
        ev["dimension"] = dj;
    }
    if (evidence.energy) {
        json rows = json::array();
        for (const auto& r : evidence.energy->rows)
            rows.push_back({{"b", r.b}, {"full", finite_or_null(r.full)}, {"half", finite_or_null(r.half)},
                            {"stable", r.stable}});
        ev["energy"] = rows;
    }
    if (evidence.fourier) ev["fourier"] = {{"at_zero", evidence.fourier->at_zero}, {"tail", evidence.fourier->tail}};
    out["evidence"] = ev;
    out["consistent"] = std::all_of(agrees.begin(), agrees.end(), [](bool b) { return b; });
    return out;
}

}  // namespace gfrag

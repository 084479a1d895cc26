#include "gfrag/lamperti.hpp"

#include "gfrag/error.hpp"
#include "gfrag/numeric.hpp"
#include "gfrag/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gfrag {

namespace {

// expm1(z)/z with its limit at 0.
double expm1_ratio(double z) {
    if (std::abs(z) < 1e-8) return 1.0 + 0.5 * z;
    return std::expm1(z) / z;
}

bool absorbed(double alpha, double xi, double accumulated, double elapsed, const AbsorptionOptions& o) {
    return elapsed >= o.min_horizon && std::exp(-alpha * xi) < o.stop_cutoff * (accumulated + 1.0);
}

void check_alpha(double alpha) {
    if (!(alpha < 0.0)) throw DomainError("lamperti: alpha must be < 0");
}

}  // namespace

double clock_increment(double dt, double v0, double v1, double alpha) {
    if (dt <= 0.0) return 0.0;
    return dt * std::exp(-alpha * v0) * expm1_ratio(-alpha * (v1 - v0));
}

LampertiClock::LampertiClock(const PathGrid& path, double alpha) : path_(&path), alpha_(alpha) {
    check_alpha(alpha);
    if (path.times.empty() || path.times.size() != path.values.size())
        throw DomainError("lamperti clock: malformed path");
    cumulative_.resize(path.times.size());
    cumulative_[0] = 0.0;
    for (std::size_t i = 1; i < path.times.size(); ++i)
        cumulative_[i] = cumulative_[i - 1] +
                         clock_increment(path.times[i] - path.times[i - 1], path.values[i - 1], path.values[i], alpha);
}

double LampertiClock::operator()(double s) const {
    const auto& times = path_->times;
    if (s <= 0.0) return 0.0;
    if (s >= times.back()) return cumulative_.back();
    const auto i = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), s) - times.begin()) - 1;
    const double dt = times[i + 1] - times[i];
    const double v0 = path_->values[i];
    const double v = v0 + (path_->values[i + 1] - v0) * (s - times[i]) / dt;
    return cumulative_[i] + clock_increment(s - times[i], v0, v, alpha_);
}

std::size_t LampertiClock::segment(double t) const {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), t);
    if (it == cumulative_.begin()) return 0;
    return static_cast<std::size_t>(it - cumulative_.begin()) - 1;
}

double LampertiClock::inverse(double t) const {
    const auto& times = path_->times;
    if (t <= 0.0) return 0.0;
    if (t > cumulative_.back()) throw PathTooShort("lamperti clock: target beyond the sampled path");
    const std::size_t i = segment(t);
    if (i + 1 >= times.size()) return times.back();
    const double dt = times[i + 1] - times[i];
    const double rem = t - cumulative_[i];
    const double a = std::exp(-alpha_ * path_->values[i]);
    const double k = -alpha_ * (path_->values[i + 1] - path_->values[i]) / dt;
    double h = 0.0;
    if (std::abs(k * dt) < 1e-12) {
        h = rem / a;
    } else {
        h = std::log1p(rem * k / a) / k;
    }
    return times[i] + std::clamp(h, 0.0, dt);
}

PssmpPath lamperti_transform(const PathGrid& xi, double alpha, double x0, std::optional<double> horizon,
                             const AbsorptionOptions& options) {
    check_alpha(alpha);
    if (!(x0 > 0.0) || !std::isfinite(x0)) throw DomainError("lamperti_transform: x0 must be > 0");
    if (horizon && !(*horizon >= 0.0)) throw DomainError("lamperti_transform: negative horizon");
    const LampertiClock clock(xi, alpha);
    const double time_scale = std::pow(x0, -alpha);

    PssmpPath out;
    out.alpha = alpha;
    out.origin = x0;
    out.nodes.push_back(PssmpNode{0.0, x0, x0});
    if (horizon && *horizon == 0.0) return out;

    const auto& s = xi.times;
    const auto& v = xi.values;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double t = time_scale * clock.at(i);
        if (horizon && t >= *horizon) {
            const double tau = clock.inverse(*horizon / time_scale);
            const std::size_t j = i - 1;
            const double dt = s[i] - s[j];
            const double level = dt > 0.0 ? v[j] + (v[i] - v[j]) * (tau - s[j]) / dt : v[i];
            const double x = x0 * std::exp(level);
            out.nodes.push_back(PssmpNode{*horizon, x, x});
            return out;
        }
        const double x = x0 * std::exp(v[i]);
        if (s[i] == s[i - 1]) {
            // Jump: the pre-jump node at the same time becomes the left limit.
            out.nodes.back().x = x;
        } else {
            out.nodes.push_back(PssmpNode{t, x, x});
        }
        if (absorbed(alpha, v[i], clock.at(i), s[i], options)) {
            out.absorption_time = t;
            return out;
        }
    }
    throw PathTooShort("lamperti_transform: path ended before the horizon or absorption");
}

double absorption_time(const PathGrid& eta, double alpha, const AbsorptionOptions& options) {
    check_alpha(alpha);
    double acc = 0.0;
    for (std::size_t i = 1; i < eta.times.size(); ++i) {
        acc += clock_increment(eta.times[i] - eta.times[i - 1], eta.values[i - 1], eta.values[i], alpha);
        if (absorbed(alpha, eta.values[i], acc, eta.times[i], options)) return acc;
    }
    throw PathTooShort("absorption_time: stop rule not met before the end of the path");
}

double sample_exp_functional_one(const PathSimulator& eta, double alpha, std::uint64_t seed,
                                 const ExpFunctionalOptions& options) {
    check_alpha(alpha);
    const double limit = std::ldexp(options.initial_horizon, options.max_doublings);
    auto stream = eta.stream(seed, std::min(options.max_step, eta.max_step()));
    double acc = 0.0;
    double prev_time = 0.0;
    double prev_value = 0.0;
    for (;;) {
        const PathStep step = stream.next();
        acc += clock_increment(step.time - prev_time, prev_value, step.left, alpha);
        prev_time = step.time;
        prev_value = step.value;
        if (absorbed(alpha, step.value, acc, step.time, options.absorption)) return acc;
        if (step.time > limit) throw PathTooShort("sample_exp_functional: no absorption within the horizon cap");
    }
}

ExpFunctionalSamples sample_exp_functional(const LevyTriplet& spine, double alpha, std::size_t n, std::uint64_t seed,
                                           const ExpFunctionalOptions& options, unsigned threads) {
    check_alpha(alpha);
    if (drift_sign(spine) != DriftSign::negative)
        throw ValidationFailure("sample_exp_functional: spine process must drift to -infinity");
    const PathSimulator sim(spine, options.max_step);
    ExpFunctionalSamples out;
    out.values.resize(n);
    parallel_for(n, threads, [&](std::size_t i) {
        out.values[i] = sample_exp_functional_one(sim, alpha, derive_seed(seed, {stream::spine, i}), options);
    });
    out.model_tag = "alpha=" + format_double(alpha);
    return out;
}

DensityEstimate estimate_density_k(const ExpFunctionalSamples& samples, std::optional<double> log_bandwidth,
                                   std::size_t grid_points) {
    const std::size_t n = samples.values.size();
    if (n < kLowPowerThreshold) throw InsufficientData("estimate_density_k: need at least 1000 samples");
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(samples.values[i] > 0.0)) throw DomainError("estimate_density_k: samples must be positive");
        z[i] = std::log(samples.values[i]);
    }
    std::sort(z.begin(), z.end());
    const auto moments = mean_and_se(z);
    const double sd = moments.std_error * std::sqrt(static_cast<double>(n));
    if (!(sd > 0.0) || z.front() == z.back()) throw InsufficientData("estimate_density_k: insufficient variation");

    double h = 0.0;
    if (log_bandwidth) {
        if (!(*log_bandwidth > 0.0)) throw DomainError("estimate_density_k: bandwidth must be > 0");
        h = *log_bandwidth;
    } else {
        const double iqr = z[(3 * n) / 4] - z[n / 4];
        const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
        h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
    }

    DensityEstimate est;
    est.bandwidth = h;
    // Grid from at least one decade below the smallest sample.
    est.grid = log_space(std::exp(z.front() - std::max(4.0 * h, std::numbers::ln10)), std::exp(z.back() + 4.0 * h),
                         grid_points);
    est.values.resize(grid_points);
    const double norm = 1.0 / (static_cast<double>(n) * h * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t g = 0; g < grid_points; ++g) {
        const double lx = std::log(est.grid[g]);
        const auto lo = std::lower_bound(z.begin(), z.end(), lx - 8.0 * h);
        const auto hi = std::upper_bound(z.begin(), z.end(), lx + 8.0 * h);
        double sum = 0.0;
        for (auto it = lo; it != hi; ++it) {
            const double u = (lx - *it) / h;
            sum += std::exp(-0.5 * u * u);
        }
        est.values[g] = norm * sum / est.grid[g];
    }
    return est;
}

double density_mass(const DensityEstimate& estimate) {
    double mass = 0.0;
    for (std::size_t i = 1; i < estimate.grid.size(); ++i)
        mass += 0.5 * (estimate.values[i] + estimate.values[i - 1]) * (estimate.grid[i] - estimate.grid[i - 1]);
    return mass;
}

InverseMomentReport inverse_moment_check(const ExpFunctionalSamples& samples, const CumulantModel& model) {
    InverseMomentReport r;
    std::vector<double> inv;
    inv.reserve(samples.values.size());
    for (double v : samples.values) inv.push_back(1.0 / v);
    const auto m = mean_and_se(inv);
    r.n = m.count;
    r.estimate = m.mean;
    r.std_error = m.std_error;
    r.reference = model.inverse_moment();
    r.z_score = m.std_error > 0.0 ? (m.mean - r.reference) / m.std_error : 0.0;
    r.low_power = r.n < kLowPowerThreshold;
    r.pass = !r.low_power && std::abs(r.z_score) < 3.0;
    return r;
}

}  // namespace gfrag

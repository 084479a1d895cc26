#include "gfrag/levy.hpp"

#include "gfrag/error.hpp"
#include "gfrag/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gfrag {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Integrate f over [lo, hi] split at the given interior breakpoints.
double integrate_split(const std::function<double(double)>& f, double lo, double hi,
                       std::initializer_list<double> breaks) {
    std::vector<double> pts{lo};
    for (double b : breaks)
        if (b > lo && b < hi) pts.push_back(b);
    pts.push_back(hi);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) total += integrate(f, pts[i], pts[i + 1]);
    return total;
}

void check_q_domain(const JumpDensity& d, double q) {
    if (!std::isfinite(q)) throw DomainError("laplace exponent: non-finite argument");
    if (q > d.integrability)
        throw DomainError("laplace exponent: q = " + format_double(q) + " exceeds declared integrability p = " +
                          format_double(d.integrability));
}

double density_at(const JumpDensity& d, double y) {
    if (y < d.support_lo || y > d.support_hi || y == 0.0) return 0.0;
    return d.density(y);
}

}  // namespace

LevyTriplet reference_dyadic_triplet() {
    return LevyTriplet{-3.0, 2.0, FiniteAtoms{{JumpAtom{-std::numbers::ln2, 1.0}}}};
}

bool has_finite_atoms(const LevyTriplet& triplet) {
    return std::holds_alternative<FiniteAtoms>(triplet.jumps);
}

double laplace_exponent(const LevyTriplet& triplet, double q) {
    const double base = triplet.drift * q + 0.5 * triplet.gaussian_var * q * q;
    if (const auto* fa = std::get_if<FiniteAtoms>(&triplet.jumps)) {
        double jumps = 0.0;
        for (const auto& a : fa->atoms) jumps += a.rate * std::expm1(q * a.location);
        return base + jumps;
    }
    const auto& d = std::get<JumpDensity>(triplet.jumps);
    check_q_domain(d, q);
    auto f = [&](double y) {
        const double small = (std::abs(y) < 1.0) ? q * y : 0.0;
        return (std::expm1(q * y) - small) * density_at(d, y);
    };
    return base + integrate_split(f, d.support_lo, d.support_hi, {-1.0, 0.0, 1.0});
}

double laplace_exponent_derivative(const LevyTriplet& triplet, double q) {
    const double base = triplet.drift + triplet.gaussian_var * q;
    if (const auto* fa = std::get_if<FiniteAtoms>(&triplet.jumps)) {
        double jumps = 0.0;
        for (const auto& a : fa->atoms) jumps += a.rate * a.location * std::exp(q * a.location);
        return base + jumps;
    }
    const auto& d = std::get<JumpDensity>(triplet.jumps);
    check_q_domain(d, q);
    auto f = [&](double y) {
        const double core = (std::abs(y) < 1.0) ? y * std::expm1(q * y) : y * std::exp(q * y);
        return core * density_at(d, y);
    };
    return base + integrate_split(f, d.support_lo, d.support_hi, {-1.0, 0.0, 1.0});
}

double negative_jump_mass(const LevyTriplet& triplet) {
    if (const auto* fa = std::get_if<FiniteAtoms>(&triplet.jumps)) {
        double mass = 0.0;
        for (const auto& a : fa->atoms)
            if (a.location < 0.0) mass += a.rate;
        return mass;
    }
    const auto& d = std::get<JumpDensity>(triplet.jumps);
    try {
        return integrate([&](double y) { return density_at(d, y); }, d.support_lo, 0.0);
    } catch (const QuadratureError&) {
        return kInf;
    }
}

DriftSign drift_sign(const LevyTriplet& triplet) {
    double slope = 0.0;
    if (has_finite_atoms(triplet)) {
        slope = laplace_exponent_derivative(triplet, 0.0);
    } else {
        // Compensated small jumps have mean zero; only |y| >= 1 shifts the mean.
        const auto& d = std::get<JumpDensity>(triplet.jumps);
        auto f = [&](double y) { return y * density_at(d, y); };
        slope = triplet.drift;
        if (d.support_lo < -1.0) slope += integrate(f, d.support_lo, -1.0);
        if (d.support_hi > 1.0) slope += integrate(f, 1.0, d.support_hi);
    }
    if (slope < 0.0) return DriftSign::negative;
    if (slope > 0.0) return DriftSign::positive;
    return DriftSign::zero;
}

const char* to_string(DriftSign sign) {
    switch (sign) {
        case DriftSign::negative: return "negative";
        case DriftSign::zero: return "zero";
        case DriftSign::positive: return "positive";
    }
    return "unknown";
}

void validate_triplet(const LevyTriplet& triplet) {
    if (!std::isfinite(triplet.drift)) throw ValidationFailure("triplet: drift must be finite");
    if (!(triplet.gaussian_var >= 0.0) || !std::isfinite(triplet.gaussian_var))
        throw ValidationFailure("triplet: gaussian variance must be finite and >= 0");

    bool positive_jumps = false;
    if (const auto* fa = std::get_if<FiniteAtoms>(&triplet.jumps)) {
        for (const auto& a : fa->atoms) {
            if (!(a.location != 0.0) || !std::isfinite(a.location))
                throw ValidationFailure("triplet: atom locations must be finite and non-zero");
            if (!(a.rate > 0.0) || !std::isfinite(a.rate))
                throw ValidationFailure("triplet: atom rates must be finite and positive");
            positive_jumps = positive_jumps || a.location > 0.0;
        }
        if (!(negative_jump_mass(triplet) > 0.0))
            throw ValidationFailure("triplet: jump measure must charge (-inf, 0); there are no children otherwise");
        if (triplet.gaussian_var == 0.0 && !positive_jumps && triplet.drift <= 0.0)
            throw ValidationFailure("triplet: xi is the negative of a subordinator");
        return;
    }

    const auto& d = std::get<JumpDensity>(triplet.jumps);
    if (!d.density) throw ValidationFailure("triplet: density function missing");
    if (!(d.support_lo < 0.0) || !(d.support_hi >= 0.0) || !std::isfinite(d.support_lo) ||
        !std::isfinite(d.support_hi))
        throw ValidationFailure("triplet: density support must be finite with lo < 0 <= hi");
    if (!(d.small_jump_threshold > 0.0) || d.small_jump_threshold >= std::min(1.0, -d.support_lo))
        throw ValidationFailure("triplet: small-jump threshold must lie in (0, min(1, |support_lo|))");
    if (!(d.integrability > 0.0)) throw ValidationFailure("triplet: integrability exponent must be positive");
    const double big_negative =
        integrate([&](double y) { return density_at(d, y); }, d.support_lo, -d.small_jump_threshold);
    if (!(big_negative > 0.0))
        throw ValidationFailure("triplet: jump measure must charge (-inf, 0); there are no children otherwise");
    if (d.support_hi > 1.0) {
        try {
            integrate([&](double y) { return std::exp(d.integrability * y) * density_at(d, y); }, 1.0, d.support_hi);
        } catch (const QuadratureError&) {
            throw ValidationFailure("triplet: exponential moment of order p does not converge");
        }
    }
    positive_jumps = d.support_hi > 0.0;
    if (triplet.gaussian_var == 0.0 && !positive_jumps) {
        // Bounded-variation drift b − ∫_{(−1,0)} y λ(y) dy; infinite variation is fine.
        double bv_drift = kInf;
        try {
            bv_drift = triplet.drift - integrate([&](double y) { return y * density_at(d, y); },
                                                 std::max(-1.0, d.support_lo), 0.0);
        } catch (const QuadratureError&) {
        }
        if (bv_drift <= 0.0) throw ValidationFailure("triplet: xi is the negative of a subordinator");
    }
}

PathSimulator::PathSimulator(const LevyTriplet& triplet, double max_step) : max_step_(max_step) {
    if (!(max_step > 0.0) || !std::isfinite(max_step)) throw DomainError("path simulator: max_step must be > 0");
    if (!(triplet.gaussian_var >= 0.0)) throw DomainError("path simulator: negative gaussian variance");
    drift_ = triplet.drift;
    variance_ = triplet.gaussian_var;

    std::vector<double> weights;
    if (const auto* fa = std::get_if<FiniteAtoms>(&triplet.jumps)) {
        for (const auto& a : fa->atoms) {
            jump_lo_.push_back(a.location);
            jump_hi_.push_back(a.location);
            weights.push_back(a.rate);
        }
    } else {
        const auto& d = std::get<JumpDensity>(triplet.jumps);
        const double delta = d.small_jump_threshold;
        auto lam = [&](double y) { return density_at(d, y); };
        // Jumps below δ are folded into the Gaussian part with matched
        // variance; mid-size jumps in [δ, 1) are compensated in the drift.
        variance_ += integrate_split([&](double y) { return y * y * lam(y); }, std::max(-delta, d.support_lo),
                                     std::min(delta, d.support_hi), {0.0});
        auto yl = [&](double y) { return y * lam(y); };
        if (d.support_lo < -delta) drift_ -= integrate(yl, std::max(-1.0, d.support_lo), -delta);
        if (d.support_hi > delta) drift_ -= integrate(yl, delta, std::min(1.0, d.support_hi));

        // Geometric cells in |y| with ratio 1.01 on each side.
        auto add_side = [&](double from, double to, double sign) {
            if (to <= from) return;
            const auto cells = static_cast<std::size_t>(std::ceil(std::log(to / from) / std::log(1.01)));
            const auto edges = log_space(from, to, std::max<std::size_t>(cells, 1) + 1);
            for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
                const double a = sign * edges[sign > 0 ? i : i + 1];
                const double b = sign * edges[sign > 0 ? i + 1 : i];
                const double w = integrate(lam, a, b);
                if (w <= 0.0) continue;
                jump_lo_.push_back(a);
                jump_hi_.push_back(b);
                weights.push_back(w);
            }
        };
        add_side(delta, -d.support_lo, -1.0);
        add_side(delta, d.support_hi, 1.0);
    }
    double total = 0.0;
    for (double w : weights) {
        total += w;
        jump_cdf_.push_back(total);
    }
    jump_rate_ = total;
    if (total > 0.0)
        for (double& c : jump_cdf_) c /= total;
}

double PathSimulator::sample_jump(Engine& engine) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(engine);
    auto it = std::upper_bound(jump_cdf_.begin(), jump_cdf_.end(), u);
    const auto i = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - jump_cdf_.begin(),
                                                                     static_cast<std::ptrdiff_t>(jump_cdf_.size()) - 1));
    if (jump_lo_[i] == jump_hi_[i]) return jump_lo_[i];
    return std::uniform_real_distribution<double>(jump_lo_[i], jump_hi_[i])(engine);
}

PathSimulator::Stream PathSimulator::stream(std::uint64_t seed, double mesh) const {
    if (!(mesh > 0.0) || mesh > max_step_ * (1.0 + 1e-12)) throw DomainError("path stream: mesh must be in (0, max_step]");
    return Stream(*this, seed, mesh);
}

PathSimulator::Stream PathSimulator::stream(std::uint64_t seed) const { return stream(seed, max_step_); }

PathSimulator::Stream::Stream(const PathSimulator& sim, std::uint64_t seed, double mesh)
    : sim_(&sim),
      gauss_engine_(make_engine(derive_seed(seed, {stream::gaussian}))),
      jump_engine_(make_engine(derive_seed(seed, {stream::jumps}))),
      mesh_(mesh) {
    next_jump_ = sim.jump_rate_ > 0.0 ? waiting_(jump_engine_) / sim.jump_rate_ : kInf;
}

PathStep PathSimulator::Stream::next() {
    const double mesh_time = static_cast<double>(mesh_index_ + 1) * mesh_;
    const bool jump = next_jump_ < mesh_time;
    const double t = jump ? next_jump_ : mesh_time;
    const double dt = t - time_;
    double left = value_ + sim_->drift_ * dt;
    if (sim_->variance_ > 0.0 && dt > 0.0) left += std::sqrt(sim_->variance_ * dt) * normal_(gauss_engine_);
    PathStep step{t, left, left, jump};
    if (jump) {
        step.value = left + sim_->sample_jump(jump_engine_);
        next_jump_ += waiting_(jump_engine_) / sim_->jump_rate_;
    } else {
        ++mesh_index_;
    }
    time_ = t;
    value_ = step.value;
    return step;
}

PathGrid sample_path(const LevyTriplet& triplet, double horizon, double max_step, std::uint64_t seed) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("sample_path: horizon must be > 0");
    if (!(max_step > 0.0)) throw DomainError("sample_path: max_step must be > 0");
    const PathSimulator sim(triplet, max_step);
    const auto n_mesh = static_cast<std::uint64_t>(std::ceil(horizon / max_step));
    auto stream = sim.stream(seed, horizon / static_cast<double>(n_mesh));
    PathGrid path;
    path.times.push_back(0.0);
    path.values.push_back(0.0);
    for (;;) {
        const PathStep step = stream.next();
        if (step.jump) {
            path.times.push_back(step.time);
            path.values.push_back(step.left);
            path.times.push_back(step.time);
            path.values.push_back(step.value);
            const std::size_t idx = path.values.size() - 1;
            path.jump_marks.push_back(JumpMark{idx, path.values[idx] - path.values[idx - 1]});
            continue;
        }
        const bool last = stream.mesh_index() == n_mesh;
        path.times.push_back(last ? horizon : step.time);
        path.values.push_back(step.value);
        if (last) break;
    }
    return path;
}

}  // namespace gfrag

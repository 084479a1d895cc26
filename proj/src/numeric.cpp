#include "gfrag/numeric.hpp"

#include "gfrag/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numeric>

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace gfrag {

std::string format_double(double x) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc()) throw Error("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    if (a == b) return 0.0;
    if (!(a < b)) throw DomainError("integrate: reversed interval");
    static thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
    // Integrate on [-1, 1] and map back ourselves: the library's own handling
    // of short intervals far from the origin stops after the first level.
    // The complement xc gives the distance to the nearer endpoint exactly.
    const double half = 0.5 * (b - a);
    auto g = [&](double x, double xc) { return x < 0.0 ? f(a - half * xc) : f(b - half * xc); };
    double error = 0.0;
    double l1 = 0.0;
    double value = 0.0;
    try {
        value = half * integrator.integrate(g, -1.0, 1.0, std::sqrt(rel_tol), &error, &l1);
    } catch (const std::exception& e) {
        throw QuadratureError(std::string("integrate: ") + e.what());
    }
    if (!std::isfinite(value)) throw QuadratureError("integrate: non-finite value");
    // The reported error is the last level difference; tanh-sinh roughly
    // doubles its digits per level, so the true error is far smaller.
    // Integrals that cancel to rounding level are accepted as they are.
    if (error > 10.0 * std::sqrt(rel_tol) * l1 && half * error > 1e-15)
        throw QuadratureError("integrate: no convergence on [" + format_double(a) + ", " + format_double(b) + "]");
    return value;
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double abs_tol) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw DomainError("bisect: bracket has no sign change");
    while (hi - lo > abs_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("least_squares: size mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw InsufficientData("least_squares: need at least two points");
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) throw InsufficientData("least_squares: degenerate abscissae");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.points = n;
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            rss += r * r;
        }
        fit.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    }
    return fit;
}

MeanEstimate mean_and_se(std::span<const double> values) {
    MeanEstimate est;
    est.count = values.size();
    if (values.empty()) return est;
    // Welford for numerical stability over 1e5+ samples.
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t k = 0;
    for (double v : values) {
        ++k;
        const double d = v - mean;
        mean += d / static_cast<double>(k);
        m2 += d * (v - mean);
    }
    est.mean = mean;
    if (k > 1) est.std_error = std::sqrt(m2 / static_cast<double>(k - 1) / static_cast<double>(k));
    return est;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InsufficientData("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_p_value(double distance, std::size_t n_a, std::size_t n_b) {
    const double ne = static_cast<double>(n_a) * static_cast<double>(n_b) / static_cast<double>(n_a + n_b);
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * distance;
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights, double q) {
    if (values.size() != weights.size() || values.empty())
        throw InsufficientData("weighted_quantile: empty or mismatched sample");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    const double target = std::clamp(q, 0.0, 1.0) * total;
    double acc = 0.0;
    for (std::size_t idx : order) {
        acc += weights[idx];
        if (acc >= target) return values[idx];
    }
    return values[order.back()];
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw DomainError("log_space: need 0 < lo < hi and n >= 2");
    std::vector<double> out(n);
    const double a = std::log(lo);
    const double step = (std::log(hi) - a) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + step * static_cast<double>(i));
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::vector<double> lin_space(double lo, double hi, std::size_t n) {
    if (n < 2) throw DomainError("lin_space: n >= 2 required");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

}  // namespace gfrag

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gfrag {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double x);

/// Adaptive tanh-sinh quadrature on a finite interval. Endpoint
/// singularities of integrable type are handled by the substitution.
/// Throws QuadratureError when the error estimate exceeds the tolerance.
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-10);

/// Bisection on a bracket [lo, hi] with f(lo), f(hi) of opposite signs.
double bisect(const std::function<double(double)>& f, double lo, double hi, double abs_tol);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t count = 0;
};

MeanEstimate mean_and_se(std::span<const double> values);

/// Two-sample Kolmogorov–Smirnov statistic sup |F_a - F_b|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic p-value of the two-sample KS statistic.
double ks_p_value(double distance, std::size_t n_a, std::size_t n_b);

/// Smallest value whose cumulative weight reaches q * total weight (q in [0,1]).
double weighted_quantile(std::span<const double> values, std::span<const double> weights, double q);

std::vector<double> log_space(double lo, double hi, std::size_t n);
std::vector<double> lin_space(double lo, double hi, std::size_t n);

}  // namespace gfrag

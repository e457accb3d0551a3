#pragma once

// Numerical building blocks for the delay analysis: exponentially weighted
// quadrature on [0, inf), the upper incomplete gamma function for arbitrary
// real order, and a bracketing scalar minimizer for positive arguments.

#include <functional>
#include <stdexcept>
#include <string>

namespace hartbound::numerics {

struct QuadratureSpec {
    double relative_tolerance = 1e-10;
    // Panel bisections allowed after the initial graded partition.
    int max_refinements = 4000;

    void validate() const;
};

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(double previous, double last);

    double previous_estimate() const noexcept { return previous_; }
    double last_estimate() const noexcept { return last_; }

private:
    double previous_;
    double last_;
};

class NoFeasiblePoint : public std::runtime_error {
public:
    NoFeasiblePoint() : std::runtime_error("no feasible point: objective is infinite on the whole grid") {}
};

/// Approximates E[f(Y)] for Y ~ Exp(mean), i.e. the integral of
/// f(y) * exp(-y / mean) / mean over [0, inf).
///
/// Substitutes u = y / mean and integrates f(mean u) e^-u over u in [0, 50] with
/// globally adaptive 15-point Gauss-Kronrod, starting from panels graded
/// geometrically towards u = 0. Throws QuadratureError when the error estimate
/// is still above the relative tolerance after max_refinements bisections.
double integrate_exp_weighted(const std::function<double(double)>& f, double mean,
                              const QuadratureSpec& spec = {});

/// Upper incomplete gamma function Gamma(a, x) for any real a and x > 0.
double upper_incomplete_gamma(double a, double x);

/// exp(x) * x^(-a) * Gamma(a, x). Stays representable where Gamma(a, x) itself
/// under- or overflows; this is the form the Shannon service transform needs.
double upper_incomplete_gamma_scaled(double a, double x);

struct Minimum {
    double argmin;
    double value;
};

struct MinimizeOptions {
    int grid_points = 64;
    // Golden-section stops once log(hi / lo) of the bracket drops below this.
    double log_tolerance = 1e-9;
};

/// Minimizes f over the open interval (lo, hi), 0 < lo < hi.
///
/// A log-spaced grid locates the best cell, golden-section search in log(x)
/// refines it. f may return +inf where it is undefined. The returned value is
/// never larger than f at any grid point. Throws NoFeasiblePoint when every
/// grid value is infinite.
Minimum minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                        const MinimizeOptions& options = {});

}  // namespace hartbound::numerics

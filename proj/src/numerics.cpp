#include "hartbound/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <tuple>
#include <utility>
#include <vector>

namespace hartbound::numerics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kUpper = 50.0;  // e^-50 ~ 2e-22 of the weight lies beyond
constexpr int kGradedPanels = 52;  // breakpoints 50 * 2^-k, k = 0..52

std::string describe_failure(double previous, double last) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "quadrature did not converge (last two estimates %.17g, %.17g)",
                  previous, last);
    return buf;
}

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a;
    double b;
    double value;
    double error;
};

Panel gauss_kronrod(const std::function<double(double)>& g, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = g(center);
    double kronrod = kKronrodWeights[7] * fc;
    double gauss = kGaussWeights[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kKronrodNodes[i];
        const double sum = g(center - dx) + g(center + dx);
        kronrod += kKronrodWeights[i] * sum;
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

// Series for the lower incomplete gamma, scaled: sum_n x^n / (a (a+1) ... (a+n)).
// Converges for every x; used when x < a + 1 with a > 0.
double lower_gamma_series_scaled(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 100000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return sum;
}

// Modified Lentz evaluation of the continued fraction
// Gamma(a, x) = e^-x x^a / (x + 1 - a - 1 (1 - a) / (x + 3 - a - ...)).
// Returns the scaled value exp(x) x^-a Gamma(a, x), or NaN if it stalls.
double upper_gamma_cf_scaled(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// Orders within this distance of a non-positive integer take the expansion
// below; elsewhere the plain formulas lose at most ~3 digits to cancellation.
constexpr double kNearIntegerOrder = 1e-3;

// exp(x) x^-e Gamma(e, x) for |e| <= kNearIntegerOrder and 0 < x < 1, where
// Gamma(e) and x^e / e both blow up and their difference must be taken
// analytically:
//   x^-e Gamma(e, x) = (x^-e Gamma(1 + e) - 1) / e - sum_k (-x)^k / (k! (e + k)).
double scaled_near_zero_order(double e, double x) {
    constexpr double euler_gamma = 0.57721566490153286061;
    // zeta(2..8); log Gamma(1 + e) = -gamma e + sum_k (-1)^k zeta(k) e^k / k.
    constexpr double zeta[] = {1.6449340668482264, 1.2020569031595943, 1.0823232337111382,
                               1.0369277551433699, 1.0173430619844491, 1.0083492773819228,
                               1.0040773561979443};
    double log_gamma_over_e = -euler_gamma;
    double power = -1.0;  // (-1)^k e^(k-1) after the update
    for (int k = 2; k <= 8; ++k) {
        power *= -e;
        log_gamma_over_e += zeta[k - 2] * power / k;
    }
    const double rate = log_gamma_over_e - std::log(x);
    const double t = e * rate;
    const double head = t == 0.0 ? rate : rate * (std::expm1(t) / t);

    double tail = 0.0;
    double term = 1.0;
    for (int k = 1; k < 1000; ++k) {
        term *= -x / k;
        const double add = term / (e + k);
        tail += add;
        if (std::abs(add) < kEps * std::abs(tail)) break;
    }
    return std::exp(x) * (head - tail);
}

double scaled_positive_order(double a, double x) {
    if (x < 1.0 && a <= kNearIntegerOrder) return scaled_near_zero_order(a, x);
    if (x >= a + 1.0) {
        const double cf = upper_gamma_cf_scaled(a, x);
        if (std::isfinite(cf)) return cf;
    }
    // Gamma(a, x) = Gamma(a) - gamma(a, x)
    const double log_prefactor = x - a * std::log(x) + std::lgamma(a);
    return std::exp(log_prefactor) - lower_gamma_series_scaled(a, x);
}

}  // namespace

void QuadratureSpec::validate() const {
    if (!(relative_tolerance > 0.0)) throw std::invalid_argument("relative_tolerance must be > 0");
    if (max_refinements < 1) throw std::invalid_argument("max_refinements must be >= 1");
}

QuadratureError::QuadratureError(double previous, double last)
    : std::runtime_error(describe_failure(previous, last)), previous_(previous), last_(last) {}

double integrate_exp_weighted(const std::function<double(double)>& f, double mean,
                              const QuadratureSpec& spec) {
    spec.validate();
    if (!(mean > 0.0)) throw std::invalid_argument("mean must be > 0");

    // After u = y / mean the weight is e^-u; features of f sit near u ~ 1 / mean,
    // so panels are graded geometrically towards zero before adaptive bisection.
    const auto g = [&](double u) { return f(mean * u) * std::exp(-u); };
    const auto worse = [](const Panel& x, const Panel& y) { return x.error < y.error; };
    std::vector<Panel> heap;
    double lo = 0.0;
    for (int k = kGradedPanels; k >= 0; --k) {
        const double hi = std::ldexp(kUpper, -k);
        heap.push_back(gauss_kronrod(g, lo, hi));
        lo = hi;
    }
    std::make_heap(heap.begin(), heap.end(), worse);

    const auto totals = [&heap] {
        double value = 0.0;
        double error = 0.0;
        for (const auto& p : heap) {
            value += p.value;
            error += p.error;
        }
        return std::pair{value, error};
    };
    auto [value, error] = totals();
    double previous = value;
    for (int split = 0; split < spec.max_refinements; ++split) {
        if (error <= spec.relative_tolerance * std::abs(value) || error < std::numeric_limits<double>::min())
            return value;
        std::pop_heap(heap.begin(), heap.end(), worse);
        const Panel worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        heap.push_back(gauss_kronrod(g, worst.a, mid));
        std::push_heap(heap.begin(), heap.end(), worse);
        heap.push_back(gauss_kronrod(g, mid, worst.b));
        std::push_heap(heap.begin(), heap.end(), worse);
        previous = value;
        std::tie(value, error) = totals();
    }
    if (error <= spec.relative_tolerance * std::abs(value) || error < std::numeric_limits<double>::min())
        return value;
    throw QuadratureError(previous, value);
}

double upper_incomplete_gamma_scaled(double a, double x) {
    if (!(x > 0.0)) throw std::domain_error("upper_incomplete_gamma: x must be > 0");
    if (std::isnan(a)) return a;
    if (a > 0.0) return scaled_positive_order(a, x);
    if (x >= 1.0) {
        const double cf = upper_gamma_cf_scaled(a, x);
        if (std::isfinite(cf)) return cf;
    }

    // Downward recurrence exp(x) x^-a Gamma(a, x) = (x * scaled(a + 1) - 1) / a,
    // started from an order in (0, 1) or, near a non-positive integer, from an
    // order next to zero so that no step divides by a vanishing order.
    const double nearest = std::round(-a);
    const bool near_integer = std::abs(a + nearest) <= kNearIntegerOrder;
    const double order = near_integer ? a + nearest : a + std::ceil(-a);
    double value = near_integer ? scaled_near_zero_order(order, x) : scaled_positive_order(order, x);
    for (double current = order - 1.0; current >= a - 0.5; current -= 1.0) {
        value = (x * value - 1.0) / current;
    }
    return value;
}

double upper_incomplete_gamma(double a, double x) {
    const double scaled = upper_incomplete_gamma_scaled(a, x);
    return std::exp(a * std::log(x) - x) * scaled;
}

Minimum minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                        const MinimizeOptions& options) {
    if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("minimize_scalar needs 0 < lo < hi");
    if (options.grid_points < 3) throw std::invalid_argument("minimize_scalar needs >= 3 grid points");
    if (!(options.log_tolerance > 0.0)) throw std::invalid_argument("log_tolerance must be > 0");

    const int n = options.grid_points;
    const double log_lo = std::log(lo);
    const double log_span = std::log(hi) - log_lo;
    // Interior points of an (n + 1)-cell partition, so the open ends are never evaluated.
    std::vector<double> log_x(n);
    std::vector<double> values(n);
    for (int i = 0; i < n; ++i) {
        log_x[i] = log_lo + log_span * (i + 1) / (n + 1);
        const double v = f(std::exp(log_x[i]));
        values[i] = std::isnan(v) ? kInf : v;
    }
    const auto best_it = std::min_element(values.begin(), values.end());
    if (!std::isfinite(*best_it)) throw NoFeasiblePoint();
    const int best = static_cast<int>(best_it - values.begin());

    double a = best > 0 ? log_x[best - 1] : log_lo;
    double b = best + 1 < n ? log_x[best + 1] : log_lo + log_span;

    const auto eval = [&](double t) {
        const double v = f(std::exp(t));
        return std::isnan(v) ? kInf : v;
    };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    while (b - a > options.log_tolerance) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }

    Minimum result{std::exp(log_x[best]), values[best]};
    if (fc < result.value) result = {std::exp(c), fc};
    if (fd < result.value) result = {std::exp(d), fd};
    return result;
}

}  // namespace hartbound::numerics

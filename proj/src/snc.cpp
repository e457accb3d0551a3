#include "hartbound/snc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace hartbound::snc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
// Recursion results with a larger estimated relative error are recomputed by series.
constexpr double kMaxRecursionRelError = 1e-10;
constexpr std::size_t kMaxRecursionHops = 20;
constexpr long long kMaxSeriesTerms = 20'000'000;
constexpr double kPerturbationStepDb = 1e-6;

struct Estimate {
    double value;
    double rel_error;
};

// log of the single-hop kernel from the log service transform.
double log_single_kernel(double log_m, int w, double log_arrival) {
    const double log_rho = log_arrival + log_m;
    if (!(log_rho < 0.0)) return kInf;
    const double log_num = (w == 0) ? 0.0 : w * log_m;
    return log_num - std::log(-std::expm1(log_rho));
}

class Recursion {
public:
    Recursion(const std::vector<double>& log_m, int w, double log_arrival, std::size_t removal_index)
        : log_m_(log_m), w_(w), log_arrival_(log_arrival), removal_index_(removal_index) {
        m_.reserve(log_m.size());
        for (double lm : log_m) m_.push_back(std::exp(lm));
    }

    Estimate eval(std::uint64_t mask) {
        if (auto it = memo_.find(mask); it != memo_.end()) return it->second;
        const Estimate e = compute(mask);
        memo_.emplace(mask, e);
        return e;
    }

private:
    Estimate compute(std::uint64_t mask) {
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < m_.size(); ++j)
            if (mask & (std::uint64_t{1} << j)) members.push_back(j);

        if (members.size() == 1) {
            const std::size_t j = members.front();
            const double log_k = log_single_kernel(log_m_[j], w_, log_arrival_);
            const double rho = std::exp(log_arrival_ + log_m_[j]);
            const double cond = 1.0 + std::abs(w_ * log_m_[j]) + rho / (1.0 - rho);
            return {std::exp(log_k), 4.0 * kEps * cond};
        }

        const std::size_t last = members.back();
        const std::size_t m = members[std::min(removal_index_, members.size() - 2)];
        const double m_last = m_[last];
        const double m_m = m_[m];
        const double diff = m_last - m_m;
        if (diff == 0.0) return {std::numeric_limits<double>::quiet_NaN(), kInf};

        const Estimate without_m = eval(mask & ~(std::uint64_t{1} << m));
        const Estimate without_last = eval(mask & ~(std::uint64_t{1} << last));
        const double c_last = m_last / diff;
        const double c_m = -m_m / diff;
        const double a = c_last * without_m.value;
        const double b = c_m * without_last.value;
        const double value = a + b;
        const double coeff_error = 2.0 * kEps * std::max(m_last, m_m) / std::abs(diff) + kEps;
        const double abs_error = std::abs(a) * (without_m.rel_error + coeff_error) +
                                 std::abs(b) * (without_last.rel_error + coeff_error) +
                                 kEps * std::abs(value);
        return {value, abs_error / std::abs(value)};
    }

    const std::vector<double>& log_m_;
    std::vector<double> m_;
    int w_;
    double log_arrival_;
    std::size_t removal_index_;
    std::unordered_map<std::uint64_t, Estimate> memo_;
};

// Direct evaluation of sum_{T >= w} x^{T-w} h_T(M_1..M_n), where h_T is the
// complete homogeneous symmetric polynomial (the Mellin transform of the
// tandem service over T superframes) and x = e^{r_a s}. All terms are
// positive, so this never cancels; it is the fallback for ill-conditioned
// partial fractions.
double series_kernel(const std::vector<double>& log_m, int w, double log_arrival) {
    const double log_max = *std::max_element(log_m.begin(), log_m.end());
    if (log_max == -kInf) return w == 0 ? 1.0 : 0.0;
    const double rho = std::exp(log_arrival + log_max);
    if (!(rho < 1.0)) return kInf;

    const std::size_t n = log_m.size();
    std::vector<double> mu(n);
    for (std::size_t j = 0; j < n; ++j) mu[j] = std::exp(log_m[j] - log_max);

    // h[j] holds h_T(mu_1..mu_{j+1}) for the current T.
    std::vector<double> h(n, 1.0);
    for (int t = 1; t <= w; ++t) {
        double below = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            h[j] = below + mu[j] * h[j];
            below = h[j];
        }
    }

    double sum = h[n - 1];
    double weight = 1.0;
    double previous_term = sum;
    for (long long t = 1; t < kMaxSeriesTerms; ++t) {
        double below = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            h[j] = below + mu[j] * h[j];
            below = h[j];
        }
        weight *= rho;
        const double term = weight * h[n - 1];
        sum += term;
        const double ratio = previous_term > 0.0 ? term / previous_term : 0.0;
        if (ratio < 1.0 && term < 1e-17 * sum * (1.0 - ratio)) {
            return std::exp(w * log_max + std::log(sum));
        }
        previous_term = term;
    }
    return kInf;
}

std::vector<double> log_transforms(double s, const PathModel& path) {
    std::vector<double> out;
    out.reserve(path.links.size());
    for (const auto& link : path.links) out.push_back(phy::log_service_transform(s, link));
    return out;
}

double kernel_from_logs(const std::vector<double>& log_m, int w, double log_arrival,
                        const KernelOptions& options) {
    for (double lm : log_m)
        if (!(log_arrival + lm < 0.0)) return kInf;
    if (log_m.size() == 1) return std::exp(log_single_kernel(log_m.front(), w, log_arrival));

    if (!options.force_series && log_m.size() <= kMaxRecursionHops) {
        Recursion recursion(log_m, w, log_arrival, options.removal_index);
        const std::uint64_t all = (std::uint64_t{1} << log_m.size()) - 1;
        const Estimate e = recursion.eval(all);
        if (e.value >= 0.0 && std::isfinite(e.value) && e.rel_error < kMaxRecursionRelError) return e.value;
    }
    return series_kernel(log_m, w, log_arrival);
}

void check_kernel_args(double s, int w) {
    if (!(s > 0.0)) throw std::invalid_argument("kernel parameter s must be > 0");
    if (w < 0) throw std::invalid_argument("target delay w must be >= 0");
}

}  // namespace

void FlowSpec::validate() const {
    if (!(r_a >= 0.0) || !std::isfinite(r_a)) throw std::invalid_argument("r_a must be finite and >= 0");
}

void PathModel::validate() const {
    if (links.empty()) throw std::invalid_argument("path must contain at least one link");
    if (links.size() > 63) throw std::invalid_argument("path longer than 63 links is not supported");
    for (const auto& link : links) link.validate();
}

double mellin_arrival(double s, const FlowSpec& flow, long long interval_length) {
    if (interval_length < 0) throw std::invalid_argument("interval length must be >= 0");
    return std::exp(flow.r_a * static_cast<double>(interval_length) * (s - 1.0));
}

double stability_max_rate(double s, const LinkModel& link) {
    if (!(s > 0.0)) throw std::invalid_argument("s must be > 0");
    return -phy::log_service_transform(s, link) / s;
}

double single_hop_kernel(double s, int w, const FlowSpec& flow, const LinkModel& link) {
    check_kernel_args(s, w);
    flow.validate();
    const double log_m = phy::log_service_transform(s, link);
    return std::exp(log_single_kernel(log_m, w, flow.r_a * s));
}

PreparedPath separate_identical_links(const PathModel& path) {
    PreparedPath out{path, false, 0.0};
    auto& links = out.path.links;
    for (std::size_t i = 1; i < links.size(); ++i) {
        const auto clashes = [&] {
            return std::any_of(links.begin(), links.begin() + static_cast<std::ptrdiff_t>(i),
                               [&](const LinkModel& other) { return other == links[i]; });
        };
        const int k = static_cast<int>(i) + 1;
        const double offset_db = (k % 2 == 0 ? 1.0 : -1.0) * k * kPerturbationStepDb;
        double applied = 0.0;
        while (clashes()) {
            applied += offset_db;
            links[i].avg_snr = phy::Snr::from_db(path.links[i].avg_snr.db() + applied);
        }
        if (applied != 0.0) {
            out.perturbed = true;
            out.max_perturbation_db = std::max(out.max_perturbation_db, std::abs(applied));
        }
    }
    return out;
}

double multi_hop_kernel(double s, int w, const FlowSpec& flow, const PathModel& path,
                        const KernelOptions& options) {
    check_kernel_args(s, w);
    flow.validate();
    path.validate();
    const PreparedPath prepared = separate_identical_links(path);
    return kernel_from_logs(log_transforms(s, prepared.path), w, flow.r_a * s, options);
}

BoundResult delay_bound(const FlowSpec& flow, const PathModel& path, int w, const BoundOptions& options) {
    if (w < 0) throw std::invalid_argument("target delay w must be >= 0");
    flow.validate();
    path.validate();
    const PreparedPath prepared = separate_identical_links(path);

    BoundResult result;
    result.perturbed = prepared.perturbed;
    result.max_perturbation_db = prepared.max_perturbation_db;

    const auto objective = [&](double s) {
        return kernel_from_logs(log_transforms(s, prepared.path), w, flow.r_a * s, options.kernel);
    };
    try {
        const auto best = numerics::minimize_scalar(objective, options.s_lo, options.s_hi,
                                                    {options.grid_points, options.log_tolerance});
        result.stable = true;
        result.optimizing_s = best.argmin;
        result.violation_probability = std::clamp(best.value, 0.0, 1.0);
        for (double lm : log_transforms(best.argmin, prepared.path)) result.per_link_mellin.push_back(std::exp(lm));
    } catch (const numerics::NoFeasiblePoint&) {
        result.stable = false;
        result.violation_probability = 1.0;
    }
    return result;
}

BoundResult delay_bound_shannon(const FlowSpec& flow, const LinkModel& link, int w, const BoundOptions& options) {
    if (link.is_ieee802154()) throw std::invalid_argument("delay_bound_shannon requires a Shannon link");
    return delay_bound(flow, PathModel{{link}}, w, options);
}

std::optional<int> min_delay_for_epsilon(const FlowSpec& flow, const PathModel& path, double epsilon,
                                         const BoundOptions& options) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
    const auto bound_at = [&](int w) { return delay_bound(flow, path, w, options); };

    const BoundResult at_zero = bound_at(0);
    if (!at_zero.stable) return std::nullopt;
    if (at_zero.violation_probability <= epsilon) return 0;

    constexpr int kMaxDelay = 1 << 24;
    int lo = 0;  // bound(lo) > epsilon
    int hi = 1;
    while (bound_at(hi).violation_probability > epsilon) {
        lo = hi;
        if (hi >= kMaxDelay) return std::nullopt;
        hi *= 2;
    }
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        if (bound_at(mid).violation_probability <= epsilon)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

}  // namespace hartbound::snc

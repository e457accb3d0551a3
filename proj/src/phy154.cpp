#include "hartbound/phy154.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

namespace hartbound::phy {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (-1)^u C(16, u) and 20 (1 - 1/u) for u = 2..16; the 1/30 is applied after summing
// so that the gamma = 0 value is exact.
struct BerTerms {
    std::array<double, 15> coeff{};
    std::array<double, 15> rate{};
};

constexpr BerTerms make_ber_terms() {
    BerTerms t;
    double binom = 1.0;  // C(16, 0)
    for (int u = 1; u <= 16; ++u) {
        binom = binom * (17 - u) / u;
        if (u >= 2) {
            const double sign = (u % 2 == 0) ? 1.0 : -1.0;
            t.coeff[u - 2] = sign * binom;
            t.rate[u - 2] = 20.0 * (1.0 - 1.0 / u);
        }
    }
    return t;
}

constexpr BerTerms kBer = make_ber_terms();

double log_add_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

Snr Snr::from_db(double db) { return Snr{db_to_linear(db)}; }
double Snr::db() const { return linear_to_db(value); }

void FrameSpec::validate() const {
    if (k_a < 1) throw std::invalid_argument("frame payload k_a must be >= 1");
    if (!(slot_duration > 0.0)) throw std::invalid_argument("slot duration must be > 0");
}

double Shannon::capacity_constant() const { return symbols_per_slot / std::log(2.0); }

void LinkModel::validate() const {
    if (!(avg_snr.value > 0.0) || !std::isfinite(avg_snr.value))
        throw std::invalid_argument("average SNR must be positive and finite");
    frame.validate();
    if (const auto* sh = std::get_if<Shannon>(&kind); sh && sh->symbols_per_slot <= 0)
        throw std::invalid_argument("symbols_per_slot must be > 0");
}

double ber(Snr gamma) {
    double sum = 0.0;
    // Smallest terms (largest u) first.
    for (int i = 14; i >= 0; --i) sum += kBer.coeff[i] * std::exp(-kBer.rate[i] * gamma.value);
    return std::clamp(sum / 30.0, 0.0, 1.0);
}

double log_ber(Snr gamma) {
    // Factor out the slowest exponential, e^{-10 gamma} (u = 2).
    const double lead = kBer.rate[0];
    double sum = 0.0;
    for (int i = 14; i >= 0; --i) sum += kBer.coeff[i] * std::exp(-(kBer.rate[i] - lead) * gamma.value);
    return -lead * gamma.value + std::log(sum / 30.0);
}

double frame_success(Snr gamma, const FrameSpec& frame) {
    return std::exp(frame.k_a * std::log1p(-ber(gamma)));
}

double fer(Snr gamma, const FrameSpec& frame) {
    return -std::expm1(frame.k_a * std::log1p(-ber(gamma)));
}

double compute_q_success(Snr avg_snr, const FrameSpec& frame, const numerics::QuadratureSpec& spec) {
    const double q = numerics::integrate_exp_weighted(
        [&frame](double y) { return frame_success(Snr{y}, frame); }, avg_snr.value, spec);
    return std::clamp(q, 0.0, 1.0);
}

double QCache::get(Snr avg_snr, const FrameSpec& frame) {
    const auto key = std::make_pair(avg_snr.value, frame.k_a);
    {
        std::shared_lock lock(mutex_);
        if (auto it = table_.find(key); it != table_.end()) return it->second;
    }
    // Computed outside the lock; concurrent misses on one key produce the same value.
    const double q = compute_q_success(avg_snr, frame, spec_);
    std::unique_lock lock(mutex_);
    return table_.emplace(key, q).first->second;
}

std::size_t QCache::size() const {
    std::shared_lock lock(mutex_);
    return table_.size();
}

void QCache::clear() {
    std::unique_lock lock(mutex_);
    table_.clear();
}

QCache& default_q_cache() {
    static QCache cache;
    return cache;
}

double q_success(const LinkModel& link, QCache& cache) {
    if (!link.is_ieee802154()) throw std::invalid_argument("q_success requires an IEEE 802.15.4 link");
    link.validate();
    return cache.get(link.avg_snr, link.frame);
}

double log_mellin_slot_service(double s, const LinkModel& link, QCache& cache) {
    const double q = q_success(link, cache);
    const double exponent = link.frame.k_a * (s - 1.0);
    if (exponent > 0.0) {
        // s > 1: e^{k_a (s-1)} may overflow, then the transform is reported as +inf.
        const double m = 1.0 + std::expm1(exponent) * q;
        return std::log(m);
    }
    const double t = std::expm1(exponent) * q;
    if (t > -0.5) return std::log1p(t);
    // M = (1 - q) + q e^{exponent}, summed in log space to keep e^{exponent} from vanishing.
    return log_add_exp(std::log1p(-q), std::log(q) + exponent);
}

double mellin_slot_service(double s, const LinkModel& link, QCache& cache) {
    return std::exp(log_mellin_slot_service(s, link, cache));
}

double log_mellin_slot_service_shannon(double arg, const LinkModel& link) {
    const auto* model = std::get_if<Shannon>(&link.kind);
    if (!model) throw std::invalid_argument("Shannon transform requires a Shannon link");
    link.validate();
    const double x = 1.0 / link.avg_snr.value;
    const double order = 1.0 + (arg - 1.0) * model->capacity_constant();
    // e^{x} x^{1 - order} Gamma(order, x) = x * scaled(order, x)
    const double scaled = numerics::upper_incomplete_gamma_scaled(order, x);
    if (!(scaled > 0.0) || !std::isfinite(scaled)) return kInf;
    return std::log(x) + std::log(scaled);
}

double mellin_slot_service_shannon(double arg, const LinkModel& link) {
    return std::exp(log_mellin_slot_service_shannon(arg, link));
}

double log_service_transform(double s, const LinkModel& link, QCache& cache) {
    if (link.is_ieee802154()) return log_mellin_slot_service(1.0 - s, link, cache);
    return log_mellin_slot_service_shannon(1.0 - s, link);
}

}  // namespace hartbound::phy

#pragma once

// IEEE 802.15.4 O-QPSK link model under Rayleigh block fading, and the
// per-slot Mellin transforms of the resulting service in the SNR domain.

#include <cstdint>
#include <map>
#include <shared_mutex>
#include <utility>
#include <variant>

#include "hartbound/numerics.hpp"

namespace hartbound::phy {

/// Linear (not dB) signal-to-noise ratio.
struct Snr {
    double value = 0.0;

    static Snr from_db(double db);
    double db() const;

    friend bool operator==(const Snr&, const Snr&) = default;
};

double db_to_linear(double db);
double linear_to_db(double linear);

struct FrameSpec {
    int k_a = 1016;               // payload bits per frame
    double slot_duration = 0.010;  // seconds

    void validate() const;
    friend bool operator==(const FrameSpec&, const FrameSpec&) = default;
};

struct Ieee802154 {
    friend bool operator==(const Ieee802154&, const Ieee802154&) = default;
};

/// Capacity-achieving benchmark: C * log2(1 + gamma) bits per slot.
struct Shannon {
    int symbols_per_slot = 625;

    /// Capacity constant in the SNR domain, symbols_per_slot / ln 2.
    double capacity_constant() const;
    friend bool operator==(const Shannon&, const Shannon&) = default;
};

using ServiceModelKind = std::variant<Ieee802154, Shannon>;

struct LinkModel {
    Snr avg_snr;
    FrameSpec frame;
    ServiceModelKind kind = Ieee802154{};

    void validate() const;
    bool is_ieee802154() const { return std::holds_alternative<Ieee802154>(kind); }
    friend bool operator==(const LinkModel&, const LinkModel&) = default;
};

/// Bit error probability at instantaneous SNR gamma (802.15.4, 2.4 GHz O-QPSK).
double ber(Snr gamma);

/// Natural log of ber(gamma). Strictly decreasing for every finite gamma >= 0,
/// including where ber itself underflows to zero (gamma above roughly 70).
double log_ber(Snr gamma);

/// Probability that all k_a bits of a frame arrive intact, (1 - p)^k_a.
double frame_success(Snr gamma, const FrameSpec& frame);

/// Frame error rate 1 - (1 - p)^k_a.
double fer(Snr gamma, const FrameSpec& frame);

/// Memo table of Q(avg_snr, k_a). Safe for concurrent use.
class QCache {
public:
    explicit QCache(numerics::QuadratureSpec spec = {}) : spec_(spec) {}

    double get(Snr avg_snr, const FrameSpec& frame);
    const numerics::QuadratureSpec& spec() const { return spec_; }
    std::size_t size() const;
    void clear();

private:
    numerics::QuadratureSpec spec_;
    mutable std::shared_mutex mutex_;
    std::map<std::pair<double, int>, double> table_;
};

/// Process-wide cache used when no explicit cache is supplied.
QCache& default_q_cache();

/// Uncached evaluation of Q = E[(1 - p(Y))^k_a], Y ~ Exp(avg_snr).
double compute_q_success(Snr avg_snr, const FrameSpec& frame, const numerics::QuadratureSpec& spec = {});

/// Rayleigh-averaged frame success probability of an 802.15.4 link.
double q_success(const LinkModel& link, QCache& cache = default_q_cache());

/// Per-slot Mellin transform of the Bernoulli service, 1 + (e^{k_a (s-1)} - 1) Q.
double mellin_slot_service(double s, const LinkModel& link, QCache& cache = default_q_cache());
double log_mellin_slot_service(double s, const LinkModel& link, QCache& cache = default_q_cache());

/// Mellin transform of the Shannon service (1 + gamma)^Cs at argument `arg`:
/// e^{1/avg} avg^{(arg-1) Cs} Gamma(1 + (arg-1) Cs, 1/avg), with Cs = C / ln 2.
double mellin_slot_service_shannon(double arg, const LinkModel& link);
double log_mellin_slot_service_shannon(double arg, const LinkModel& link);

/// Log of the per-slot service transform at 1 - s for whichever model the link uses.
/// This is the quantity every kernel is built from.
double log_service_transform(double s, const LinkModel& link, QCache& cache = default_q_cache());

}  // namespace hartbound::phy

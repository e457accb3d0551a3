#pragma once

// Monte Carlo superframe simulator: one flow, FIFO queues at every node,
// one slot per link per superframe, Rayleigh block fading and all-or-nothing
// frame delivery.

#include <cstdint>
#include <map>
#include <vector>

#include "hartbound/phy154.hpp"
#include "hartbound/snc.hpp"

namespace hartbound::sim {

/// xoshiro256** seeded through SplitMix64. Each (seed, stream) pair yields an
/// independent sequence with period 2^256 - 1.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

private:
    std::uint64_t state_[4];
};

/// Exponential draw by inverse transform, -avg * log(1 - u): one uniform per
/// draw, and for a fixed uniform the result grows with avg.
phy::Snr sample_snr(Rng& rng, phy::Snr avg_snr);

enum class Forwarding {
    CutThrough,       // bits received in slot j may leave in slot j+1 of the same superframe
    StoreAndForward,  // bits received in superframe i move on no earlier than superframe i+1
};

struct SimConfig {
    snc::PathModel path;
    snc::FlowSpec flow;
    std::int64_t num_superframes = 1;
    std::uint64_t seed = 0;
    std::int64_t warmup_superframes = 0;
    std::vector<int> target_delays;
    Forwarding forwarding = Forwarding::CutThrough;

    void validate() const;
};

struct ViolationEstimate {
    double probability = 0.0;
    std::size_t sample_count = 0;
    friend bool operator==(const ViolationEstimate&, const ViolationEstimate&) = default;
};

struct SimReport {
    std::vector<std::int64_t> block_delays;  // superframes, completed post-warmup blocks in arrival order
    std::map<int, ViolationEstimate> violation_estimates;
    std::vector<double> per_link_success_rate;
    std::size_t unfinished_blocks = 0;
    std::uint64_t bits_arrived = 0;
    std::uint64_t bits_departed = 0;
    std::vector<std::uint64_t> final_queue_bits;  // per sending node
    bool conservation_held = true;                // checked at every superframe boundary
    bool fifo_held = true;
    Forwarding forwarding = Forwarding::CutThrough;

    friend bool operator==(const SimReport&, const SimReport&) = default;
};

SimReport run(const SimConfig& config);

/// Fraction of delays strictly greater than w, with the sample count.
ViolationEstimate empirical_violation(const std::vector<std::int64_t>& delays, int w);

}  // namespace hartbound::sim

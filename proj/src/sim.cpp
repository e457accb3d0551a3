#include "hartbound/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace hartbound::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

struct PendingBlock {
    std::int64_t arrival;
    std::uint64_t cumulative_end;  // bits_arrived once this block is in
};

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    // Mix the stream id through its own SplitMix64 step so nearby ids diverge.
    std::uint64_t s = stream;
    std::uint64_t x = seed ^ splitmix64(s);
    for (auto& word : state_) word = splitmix64(x);
}

std::uint64_t Rng::next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

phy::Snr sample_snr(Rng& rng, phy::Snr avg_snr) {
    if (!(avg_snr.value > 0.0)) throw std::invalid_argument("average SNR must be > 0");
    return phy::Snr{-avg_snr.value * std::log1p(-rng.uniform())};
}

void SimConfig::validate() const {
    path.validate();
    flow.validate();
    for (const auto& link : path.links)
        if (!link.is_ieee802154()) throw std::invalid_argument("the simulator models IEEE 802.15.4 links only");
    if (flow.r_a != std::floor(flow.r_a)) throw std::invalid_argument("simulated r_a must be a whole number of bits");
    if (num_superframes < 1) throw std::invalid_argument("num_superframes must be >= 1");
    if (warmup_superframes < 0 || warmup_superframes >= num_superframes)
        throw std::invalid_argument("warmup must satisfy 0 <= warmup < num_superframes");
    for (int w : target_delays)
        if (w < 0) throw std::invalid_argument("target delays must be >= 0");
}

SimReport run(const SimConfig& config) {
    config.validate();
    const std::size_t n = config.path.links.size();
    const auto r_a = static_cast<std::uint64_t>(config.flow.r_a);

    std::vector<Rng> streams;
    streams.reserve(n);
    for (std::size_t j = 0; j < n; ++j) streams.emplace_back(config.seed, j);

    SimReport report;
    report.forwarding = config.forwarding;
    std::vector<std::uint64_t> queue(n, 0);
    std::vector<std::uint64_t> successes(n, 0);
    std::deque<PendingBlock> pending;
    std::int64_t last_departure = -1;

    const auto serve = [&](std::size_t j) {
        const auto& link = config.path.links[j];
        // Both uniforms are consumed every slot so streams stay aligned across configurations.
        const phy::Snr gamma = sample_snr(streams[j], link.avg_snr);
        const double u = streams[j].uniform();
        if (!(u < phy::frame_success(gamma, link.frame))) return;
        ++successes[j];
        const std::uint64_t moved = std::min<std::uint64_t>(static_cast<std::uint64_t>(link.frame.k_a), queue[j]);
        queue[j] -= moved;
        if (j + 1 < n)
            queue[j + 1] += moved;
        else
            report.bits_departed += moved;
    };

    for (std::int64_t i = 0; i < config.num_superframes; ++i) {
        queue[0] += r_a;
        report.bits_arrived += r_a;
        pending.push_back({i, report.bits_arrived});

        if (config.forwarding == Forwarding::CutThrough) {
            for (std::size_t j = 0; j < n; ++j) serve(j);
        } else {
            for (std::size_t j = n; j-- > 0;) serve(j);
        }

        while (!pending.empty() && pending.front().cumulative_end <= report.bits_departed) {
            const PendingBlock& block = pending.front();
            if (i < last_departure) report.fifo_held = false;
            last_departure = i;
            if (block.arrival >= config.warmup_superframes) report.block_delays.push_back(i - block.arrival);
            pending.pop_front();
        }

        const std::uint64_t queued = std::accumulate(queue.begin(), queue.end(), std::uint64_t{0});
        if (report.bits_arrived != report.bits_departed + queued) report.conservation_held = false;
    }

    report.unfinished_blocks = static_cast<std::size_t>(std::count_if(
        pending.begin(), pending.end(),
        [&](const PendingBlock& b) { return b.arrival >= config.warmup_superframes; }));
    report.final_queue_bits = queue;
    for (std::size_t j = 0; j < n; ++j)
        report.per_link_success_rate.push_back(static_cast<double>(successes[j]) /
                                               static_cast<double>(config.num_superframes));
    for (int w : config.target_delays) {
        report.violation_estimates[w] =
            report.block_delays.empty() ? ViolationEstimate{} : empirical_violation(report.block_delays, w);
    }
    return report;
}

ViolationEstimate empirical_violation(const std::vector<std::int64_t>& delays, int w) {
    if (delays.empty()) throw std::invalid_argument("empirical_violation needs at least one delay sample");
    const auto exceed = std::count_if(delays.begin(), delays.end(), [w](std::int64_t d) { return d > w; });
    return {static_cast<double>(exceed) / static_cast<double>(delays.size()), delays.size()};
}

}  // namespace hartbound::sim

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "hartbound/sim.hpp"

using namespace hartbound;
using namespace hartbound::sim;

namespace {

phy::LinkModel link_db(double db) {
    phy::LinkModel l;
    l.avg_snr = phy::Snr::from_db(db);
    return l;
}

SimConfig config_db(std::initializer_list<double> dbs, double r_a, std::int64_t n, std::uint64_t seed) {
    SimConfig c;
    for (double db : dbs) c.path.links.push_back(link_db(db));
    c.flow.r_a = r_a;
    c.num_superframes = n;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_SUITE("rng") {
    TEST_CASE("deterministic per seed and stream") {
        Rng a(42, 3);
        Rng b(42, 3);
        Rng c(42, 4);
        Rng d(43, 3);
        int same_c = 0;
        int same_d = 0;
        for (int i = 0; i < 1000; ++i) {
            const auto x = a.next();
            CHECK(x == b.next());
            same_c += x == c.next();
            same_d += x == d.next();
        }
        CHECK(same_c == 0);
        CHECK(same_d == 0);
    }

    TEST_CASE("uniform lies in [0, 1) with mean one half") {
        Rng r(1, 0);
        double sum = 0.0;
        int outside = 0;
        const int n = 1'000'000;
        for (int i = 0; i < n; ++i) {
            const double u = r.uniform();
            outside += !(u >= 0.0 && u < 1.0);
            sum += u;
        }
        CHECK(outside == 0);
        CHECK(std::abs(sum / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
    }
}

TEST_SUITE("sample_snr") {
    TEST_CASE("exponential with the requested mean") {
        const phy::Snr avg = phy::Snr::from_db(5.0);
        Rng r(7, 0);
        const int n = 1'000'000;
        std::vector<double> draws(n);
        for (auto& d : draws) d = sample_snr(r, avg).value;

        const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
        CHECK(std::abs(mean - avg.value) < 3.0 * avg.value / std::sqrt(n));

        std::sort(draws.begin(), draws.end());
        double ks = 0.0;
        for (int i = 0; i < n; ++i) {
            const double cdf = -std::expm1(-draws[static_cast<std::size_t>(i)] / avg.value);
            ks = std::max({ks, std::abs(cdf - static_cast<double>(i) / n), std::abs(cdf - static_cast<double>(i + 1) / n)});
        }
        CHECK(ks < 0.002);
    }

    TEST_CASE("same uniform gives a larger draw for a larger mean") {
        Rng a(9, 1);
        Rng b(9, 1);
        for (int i = 0; i < 10000; ++i) CHECK(sample_snr(a, phy::Snr{2.0}).value <= sample_snr(b, phy::Snr{3.0}).value);
    }

    TEST_CASE("rejects non-positive means") {
        Rng r(1, 1);
        CHECK_THROWS_AS(sample_snr(r, phy::Snr{0.0}), std::invalid_argument);
    }
}

TEST_SUITE("empirical_violation") {
    TEST_CASE("counts strict exceedances") {
        const std::vector<std::int64_t> d{0, 1, 2, 3, 4};
        CHECK(empirical_violation(d, 2).probability == doctest::Approx(0.4));
        CHECK(empirical_violation(d, 4).probability == 0.0);
        CHECK(empirical_violation(d, -1).probability == 1.0);
        CHECK(empirical_violation(d, 0).sample_count == 5);
        CHECK_THROWS_AS(empirical_violation({}, 1), std::invalid_argument);
    }

    TEST_CASE("recovers a geometric tail") {
        std::mt19937_64 gen(3);
        std::geometric_distribution<int> draw(0.3);
        std::vector<std::int64_t> d(200000);
        for (auto& x : d) x = draw(gen);
        for (int w : {0, 2, 5, 10}) {
            const double p = std::pow(0.7, w + 1);
            const double se = std::sqrt(p * (1 - p) / static_cast<double>(d.size()));
            CHECK(std::abs(empirical_violation(d, w).probability - p) < 4.0 * se);
        }
    }
}

TEST_SUITE("simulator") {
    TEST_CASE("perfect channels deliver within the arrival superframe") {
        auto c = config_db({90.0, 90.0, 90.0}, 80, 10000, 5);
        c.target_delays = {0, 1};
        const auto r = run(c);
        CHECK(r.block_delays.size() == 10000);
        CHECK(std::all_of(r.block_delays.begin(), r.block_delays.end(), [](auto d) { return d == 0; }));
        CHECK(r.violation_estimates.at(0).probability == 0.0);
        CHECK(r.unfinished_blocks == 0);
    }

    TEST_CASE("store-and-forward over perfect channels takes one superframe per extra hop") {
        auto c = config_db({90.0, 90.0, 90.0, 90.0}, 80, 5000, 5);
        c.forwarding = Forwarding::StoreAndForward;
        const auto r = run(c);
        CHECK(r.forwarding == Forwarding::StoreAndForward);
        CHECK(std::all_of(r.block_delays.begin(), r.block_delays.end(), [](auto d) { return d == 3; }));
        CHECK(r.unfinished_blocks == 3);
    }

    TEST_CASE("overload makes the backlog grow") {
        const auto r = run(config_db({90.0}, 1100, 10000, 5));
        CHECK(r.final_queue_bits[0] >= 84u * 10000u - 1100u);
        CHECK(r.conservation_held);
        CHECK(r.unfinished_blocks > 700);
    }

    TEST_CASE("conservation, FIFO and bookkeeping") {
        auto c = config_db({5.0, 6.0, 7.0}, 80, 50000, 11);
        c.warmup_superframes = 1000;
        c.target_delays = {0, 3, 8};
        const auto r = run(c);
        CHECK(r.conservation_held);
        CHECK(r.fifo_held);
        CHECK(r.bits_arrived == 80u * 50000u);
        std::uint64_t queued = 0;
        for (auto q : r.final_queue_bits) queued += q;
        CHECK(r.bits_arrived == r.bits_departed + queued);
        CHECK(r.block_delays.size() + r.unfinished_blocks == 49000u);
        for (int w : c.target_delays) CHECK(r.violation_estimates.at(w) == empirical_violation(r.block_delays, w));
    }

    TEST_CASE("deterministic for a fixed seed") {
        const auto c = config_db({5.0, 8.0}, 80, 20000, 99);
        CHECK(run(c) == run(c));
        auto other = c;
        other.seed = 100;
        CHECK(run(c).block_delays != run(other).block_delays);
    }

    TEST_CASE("success rates match the average success probability") {
        const auto c = config_db({5.0, 6.0, 7.0, 8.0}, 80, 200000, 2);
        const auto r = run(c);
        for (std::size_t j = 0; j < c.path.hops(); ++j) {
            const double q = phy::q_success(c.path.links[j]);
            const double se = std::sqrt(q * (1.0 - q) / static_cast<double>(c.num_superframes));
            CAPTURE(j);
            CHECK(std::abs(r.per_link_success_rate[j] - q) < 3.0 * se);
        }
    }

    TEST_CASE("better channels never delay a block more") {
        const auto low = run(config_db({5.0, 6.0, 7.0}, 80, 30000, 4));
        const auto high = run(config_db({6.0, 7.0, 8.0}, 80, 30000, 4));
        REQUIRE(high.block_delays.size() >= low.block_delays.size());
        for (std::size_t i = 0; i < low.block_delays.size(); ++i) CHECK(high.block_delays[i] <= low.block_delays[i]);
    }

    TEST_CASE("store-and-forward never beats cut-through") {
        auto c = config_db({5.0, 6.0, 7.0}, 80, 30000, 8);
        const auto cut = run(c);
        c.forwarding = Forwarding::StoreAndForward;
        const auto stored = run(c);
        REQUIRE(cut.block_delays.size() >= stored.block_delays.size());
        for (std::size_t i = 0; i < stored.block_delays.size(); ++i) CHECK(stored.block_delays[i] >= cut.block_delays[i]);
    }

    TEST_CASE("configuration is validated") {
        auto c = config_db({5.0}, 80, 100, 1);
        c.warmup_superframes = 100;
        CHECK_THROWS_AS(run(c), std::invalid_argument);
        c = config_db({5.0}, 80.5, 100, 1);
        CHECK_THROWS_AS(run(c), std::invalid_argument);
        c = config_db({5.0}, 80, 100, 1);
        c.path.links[0].kind = phy::Shannon{};
        CHECK_THROWS_AS(run(c), std::invalid_argument);
        c = config_db({5.0}, 80, 0, 1);
        CHECK_THROWS_AS(run(c), std::invalid_argument);
    }
}

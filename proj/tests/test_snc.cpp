#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "hartbound/snc.hpp"

using namespace hartbound;
using namespace hartbound::snc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

phy::LinkModel link_db(double db) {
    phy::LinkModel l;
    l.avg_snr = phy::Snr::from_db(db);
    return l;
}

PathModel path_db(std::initializer_list<double> dbs) {
    PathModel p;
    for (double db : dbs) p.links.push_back(link_db(db));
    return p;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

// sum_{v >= 0} x^v M^{v+w}, truncated once the terms are negligible.
double geometric_oracle(double m, double x, int w) {
    double sum = 0.0;
    double term = std::pow(m, w);
    for (int v = 0; v < 10'000'000; ++v) {
        sum += term;
        if (term < 1e-18 * sum) break;
        term *= x * m;
    }
    return sum;
}

// sum_{T >= w} x^{T-w} h_T(M), with h_T summed over every composition of T.
double composition_oracle(const std::vector<double>& m, double x, int w) {
    if (!(x * *std::max_element(m.begin(), m.end()) < 1.0)) return kInf;
    double total = 0.0;
    for (int t = w; t < 5000; ++t) {
        double h = 0.0;
        if (m.size() == 2) {
            for (int i = 0; i <= t; ++i) h += std::pow(m[0], i) * std::pow(m[1], t - i);
        } else {
            for (int i = 0; i <= t; ++i)
                for (int j = 0; i + j <= t; ++j) h += std::pow(m[0], i) * std::pow(m[1], j) * std::pow(m[2], t - i - j);
        }
        const double term = std::pow(x, t - w) * h;
        total += term;
        if (t > w + 10 && term < 1e-17 * total) break;
    }
    return total;
}

double transform(double s, const phy::LinkModel& link) { return phy::mellin_slot_service(1.0 - s, link); }

double dense_grid_minimum(const FlowSpec& flow, const PathModel& path, int w, int n) {
    double best = kInf;
    for (int i = 1; i <= n; ++i) {
        const double s = 1e-7 * std::pow(5.0 / 1e-7, static_cast<double>(i) / (n + 1));
        best = std::min(best, multi_hop_kernel(s, w, flow, path));
    }
    return std::min(best, 1.0);
}

}  // namespace

TEST_SUITE("arrivals") {
    TEST_CASE("constant-rate transform") {
        CHECK(mellin_arrival(1.0, FlowSpec{80}, 7) == 1.0);
        CHECK(mellin_arrival(0.5, FlowSpec{80}, 2) == doctest::Approx(std::exp(-80.0)).epsilon(1e-14));
        CHECK(mellin_arrival(0.999, FlowSpec{1000}, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
        CHECK(mellin_arrival(0.3, FlowSpec{0}, 100) == 1.0);
        CHECK_THROWS_AS(mellin_arrival(0.3, FlowSpec{1}, -1), std::invalid_argument);
    }

    TEST_CASE("flow validation") {
        CHECK_THROWS_AS(FlowSpec{-1.0}.validate(), std::invalid_argument);
        CHECK_THROWS_AS(FlowSpec{kInf}.validate(), std::invalid_argument);
        CHECK_NOTHROW(FlowSpec{0.0}.validate());
    }
}

TEST_SUITE("single_hop_kernel") {
    TEST_CASE("closed form and truncated geometric sum") {
        const auto link = link_db(8.0);
        const FlowSpec flow{80};
        for (double s : {1e-3, 5e-3, 0.01, 0.02}) {
            const double m = transform(s, link);
            const double x = std::exp(flow.r_a * s);
            REQUIRE(x * m < 1.0);
            for (int w : {0, 1, 5, 20}) {
                const double k = single_hop_kernel(s, w, flow, link);
                CAPTURE(s);
                CAPTURE(w);
                CHECK(rel_diff(k, std::pow(m, w) / (1.0 - x * m)) < 1e-12);
                CHECK(rel_diff(k, geometric_oracle(m, x, w)) < 1e-9);
            }
        }
    }

    TEST_CASE("infinite outside the stability region") {
        const auto link = link_db(8.0);
        CHECK(single_hop_kernel(0.01, 3, FlowSpec{2000}, link) == kInf);
        CHECK_THROWS_AS(single_hop_kernel(0.0, 3, FlowSpec{80}, link), std::invalid_argument);
        CHECK_THROWS_AS(single_hop_kernel(0.1, -1, FlowSpec{80}, link), std::invalid_argument);
    }

    TEST_CASE("multi-hop kernel reduces to the single-hop one") {
        const auto link = link_db(6.5);
        for (int w : {0, 3, 17})
            CHECK(multi_hop_kernel(0.02, w, FlowSpec{120}, PathModel{{link}}) ==
                  single_hop_kernel(0.02, w, FlowSpec{120}, link));
    }
}

TEST_SUITE("stability") {
    TEST_CASE("perfect channel supports the full frame") {
        for (double s : {1e-4, 1e-3, 3e-3}) CHECK(stability_max_rate(s, link_db(90.0)) == doctest::Approx(1016.0).epsilon(1e-6));
    }

    TEST_CASE("dead channel supports nothing") {
        for (double s : {1e-4, 1e-2, 1.0}) CHECK(stability_max_rate(s, link_db(-90.0)) == doctest::Approx(0.0));
    }

    TEST_CASE("kernel feasibility flips at the maximal rate") {
        const auto link = link_db(5.0);
        for (double s : {1e-3, 0.01, 0.1}) {
            const double r_max = stability_max_rate(s, link);
            CAPTURE(s);
            CHECK(std::isfinite(single_hop_kernel(s, 2, FlowSpec{r_max * (1.0 - 1e-6)}, link)));
            CHECK(single_hop_kernel(s, 2, FlowSpec{r_max * (1.0 + 1e-6)}, link) == kInf);
        }
    }

    TEST_CASE("maximal rate falls from the mean throughput as s grows") {
        const auto link = link_db(5.0);
        const double mean_rate = 1016.0 * phy::q_success(link);
        CHECK(stability_max_rate(1e-7, link) == doctest::Approx(mean_rate).epsilon(1e-4));
        double prev = kInf;
        for (double s = 1e-5; s < 5.0; s *= 2.0) {
            const double r = stability_max_rate(s, link);
            CHECK(r < prev);
            CHECK(r <= mean_rate);
            prev = r;
        }
    }
}

TEST_SUITE("multi_hop_kernel") {
    const FlowSpec flow{80};

    TEST_CASE("two hops against the explicit partial fraction") {
        const auto path = path_db({5.0, 7.0});
        for (double s : {1e-3, 5e-3, 0.01}) {
            const double m1 = transform(s, path.links[0]);
            const double m2 = transform(s, path.links[1]);
            const double x = std::exp(flow.r_a * s);
            for (int w : {0, 1, 10, 30}) {
                const double expected = (std::pow(m1, w + 1) / (1.0 - x * m1) - std::pow(m2, w + 1) / (1.0 - x * m2)) /
                                        (m1 - m2);
                CAPTURE(s);
                CAPTURE(w);
                CHECK(rel_diff(multi_hop_kernel(s, w, flow, path), expected) < 1e-9);
                CHECK(rel_diff(multi_hop_kernel(s, w, flow, path), composition_oracle({m1, m2}, x, w)) < 1e-9);
            }
        }
    }

    TEST_CASE("three hops against summation over compositions") {
        const auto path = path_db({5.0, 6.0, 8.0});
        for (double s : {5e-3, 0.01}) {
            std::vector<double> m;
            for (const auto& l : path.links) m.push_back(transform(s, l));
            const double x = std::exp(flow.r_a * s);
            for (int w : {0, 4, 12}) {
                CAPTURE(s);
                CAPTURE(w);
                CHECK(rel_diff(multi_hop_kernel(s, w, flow, path), composition_oracle(m, x, w)) < 1e-9);
            }
        }
    }

    TEST_CASE("invariant under permutation and choice of removed link") {
        for (const auto& base : {path_db({5.0, 6.0, 7.0}), path_db({5.0, 6.0, 7.0, 8.0}), path_db({3.0, 9.0, 4.5, 12.0, 6.0})}) {
            for (double s : {1e-3, 8e-3}) {
                for (int w : {0, 5, 20}) {
                    const double reference = multi_hop_kernel(s, w, flow, base, {0, true});
                    std::vector<std::size_t> order(base.hops());
                    std::iota(order.begin(), order.end(), 0);
                    do {
                        PathModel permuted;
                        for (std::size_t i : order) permuted.links.push_back(base.links[i]);
                        for (std::size_t r = 0; r < base.hops(); ++r) {
                            CAPTURE(s);
                            CAPTURE(w);
                            CAPTURE(r);
                            CHECK(rel_diff(multi_hop_kernel(s, w, flow, permuted, {r, false}), reference) < 1e-9);
                        }
                    } while (std::next_permutation(order.begin(), order.end()));
                }
            }
        }
    }

    TEST_CASE("identical links are perturbed and match the repeated-root series") {
        const auto path = path_db({6.0, 6.0, 6.0});
        const auto prepared = separate_identical_links(path);
        CHECK(prepared.perturbed);
        CHECK(prepared.max_perturbation_db <= 3e-6);
        CHECK(prepared.path.links[1].avg_snr.db() == doctest::Approx(6.0 + 2e-6).epsilon(1e-12));
        CHECK(prepared.path.links[2].avg_snr.db() == doctest::Approx(6.0 - 3e-6).epsilon(1e-12));

        const double s = 0.01;
        const double m = transform(s, path.links[0]);
        const double x = std::exp(flow.r_a * s);
        for (int w : {0, 3, 15}) {
            // h_T(M, M, M) = C(T + 2, 2) M^T
            double expected = 0.0;
            for (int t = w; t < 100000; ++t) {
                const double term = std::pow(x, t - w) * 0.5 * (t + 1.0) * (t + 2.0) * std::pow(m, t);
                expected += term;
                if (t > w + 10 && term < 1e-18 * expected) break;
            }
            CAPTURE(w);
            CHECK(rel_diff(multi_hop_kernel(s, w, flow, path), expected) < 1e-4);
        }
    }

    TEST_CASE("distinct links are left alone") {
        const auto prepared = separate_identical_links(path_db({5.0, 6.0, 7.0}));
        CHECK_FALSE(prepared.perturbed);
        CHECK(prepared.path == path_db({5.0, 6.0, 7.0}));
    }

    TEST_CASE("nearly identical links stay accurate") {
        const auto path = path_db({6.0, 6.0 + 1e-9, 6.0 + 2e-9, 6.0 - 1e-9});
        for (int w : {0, 8, 25}) {
            const double series = multi_hop_kernel(0.01, w, flow, path, {0, true});
            const double default_path = multi_hop_kernel(0.01, w, flow, path);
            CHECK(std::isfinite(default_path));
            CHECK(rel_diff(series, default_path) < 1e-9);
        }
    }
}

TEST_SUITE("delay_bound") {
    const FlowSpec flow{80};

    TEST_CASE("unstable when the rate exceeds the frame payload") {
        const auto r = delay_bound(FlowSpec{1100}, path_db({8.0}), 10);
        CHECK_FALSE(r.stable);
        CHECK(r.violation_probability == 1.0);
    }

    TEST_CASE("zero rate reduces to waiting for one success") {
        const auto link = link_db(5.0);
        const double q = phy::q_success(link);
        const auto r = delay_bound(FlowSpec{0}, PathModel{{link}}, 10);
        CHECK(r.stable);
        CHECK(r.violation_probability == doctest::Approx(std::pow(1.0 - q, 10) / q).epsilon(1e-9));
        CHECK(delay_bound(FlowSpec{0}, PathModel{{link}}, 0).violation_probability == 1.0);
    }

    TEST_CASE("optimum matches a dense grid at w = 20") {
        const auto path = path_db({5.0, 6.0, 7.0, 8.0});
        const auto r = delay_bound(flow, path, 20);
        const double dense = dense_grid_minimum(flow, path, 20, 20000);
        CHECK(r.stable);
        CHECK(r.violation_probability <= dense * (1.0 + 1e-9));
        CHECK(r.violation_probability >= dense * (1.0 - 1e-4));
        CHECK(r.per_link_mellin.size() == 4);
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(r.per_link_mellin[j] == doctest::Approx(transform(r.optimizing_s, path.links[j])).epsilon(1e-12));
    }

    TEST_CASE("within [0, 1] and decreasing in w") {
        const auto path = path_db({5.0, 6.0, 7.0});
        double prev = 1.0;
        for (int w = 0; w <= 30; ++w) {
            const double b = delay_bound(flow, path, w).violation_probability;
            CHECK(b >= 0.0);
            CHECK(b <= 1.0);
            CHECK(b <= prev * (1.0 + 1e-9));
            prev = b;
        }
    }

    TEST_CASE("increasing in the rate, decreasing in SNR, increasing in hops") {
        for (int w : {5, 10, 20}) {
            CHECK(delay_bound(FlowSpec{60}, path_db({8.0}), w).violation_probability <=
                  delay_bound(FlowSpec{80}, path_db({8.0}), w).violation_probability);
            CHECK(delay_bound(flow, path_db({9.0, 6.0}), w).violation_probability <=
                  delay_bound(flow, path_db({8.0, 6.0}), w).violation_probability);
            CHECK(delay_bound(flow, path_db({5.0, 6.0, 7.0}), w).violation_probability <=
                  delay_bound(flow, path_db({5.0, 6.0, 7.0, 8.0}), w).violation_probability);
        }
    }

    TEST_CASE("Shannon capacity gives the smaller bound") {
        for (double db : {3.0, 5.0, 8.0}) {
            auto shannon = link_db(db);
            shannon.kind = phy::Shannon{};
            for (int w : {1, 3, 5, 10}) {
                const auto s = delay_bound_shannon(flow, shannon, w);
                const auto p = delay_bound(flow, path_db({db}), w);
                CAPTURE(db);
                CAPTURE(w);
                CHECK(s.stable);
                CHECK(s.violation_probability <= p.violation_probability);
            }
        }
        CHECK_THROWS_AS(delay_bound_shannon(flow, link_db(5.0), 3), std::invalid_argument);
    }

    TEST_CASE("invalid inputs") {
        CHECK_THROWS_AS(delay_bound(flow, PathModel{}, 3), std::invalid_argument);
        CHECK_THROWS_AS(delay_bound(flow, path_db({5.0}), -1), std::invalid_argument);
    }
}

TEST_SUITE("min_delay_for_epsilon") {
    TEST_CASE("matches a linear scan") {
        const FlowSpec flow{80};
        const auto path = path_db({5.0, 7.0});
        for (double eps : {0.5, 1e-2, 1e-4, 1e-8}) {
            int scan = 0;
            while (delay_bound(flow, path, scan).violation_probability > eps) ++scan;
            CAPTURE(eps);
            CHECK(min_delay_for_epsilon(flow, path, eps) == scan);
        }
    }

    TEST_CASE("no finite delay when unstable") {
        CHECK_FALSE(min_delay_for_epsilon(FlowSpec{1100}, path_db({8.0}), 1e-3).has_value());
        CHECK_THROWS_AS(min_delay_for_epsilon(FlowSpec{80}, path_db({8.0}), 0.0), std::invalid_argument);
    }
}

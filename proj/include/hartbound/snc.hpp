#pragma once

// Stochastic network calculus in the SNR domain: kernels, stability and the
// end-to-end delay violation bound of a TDMA path with one slot per link.

#include <optional>
#include <vector>

#include "hartbound/phy154.hpp"

namespace hartbound::snc {

using phy::LinkModel;

/// Constant-rate source: r_a bits enter the first queue at every superframe start.
struct FlowSpec {
    double r_a = 0.0;

    void validate() const;
    friend bool operator==(const FlowSpec&, const FlowSpec&) = default;
};

/// Link j is served in slot j of every superframe.
struct PathModel {
    std::vector<LinkModel> links;

    void validate() const;
    std::size_t hops() const { return links.size(); }
    friend bool operator==(const PathModel&, const PathModel&) = default;
};

struct QosTarget {
    int w = 0;              // superframes
    double epsilon = 1e-3;  // tolerated violation probability
};

struct BoundResult {
    double violation_probability = 1.0;
    double optimizing_s = 0.0;
    bool stable = false;
    std::vector<double> per_link_mellin;  // service transform at 1 - s, per link
    // Identical links are split apart by a tiny SNR offset before the recursion.
    bool perturbed = false;
    double max_perturbation_db = 0.0;
};

struct KernelOptions {
    // Position (within the current sub-path) of the link removed alongside the
    // last one in the recursion; clamped to the sub-path. 0 is the first link.
    std::size_t removal_index = 0;
    // Skip the partial-fraction recursion and sum the defining series directly.
    bool force_series = false;
};

struct BoundOptions {
    double s_lo = 1e-7;
    double s_hi = 5.0;
    int grid_points = 128;
    double log_tolerance = 1e-9;
    KernelOptions kernel;
};

/// e^{r_a * length * (s - 1)}
double mellin_arrival(double s, const FlowSpec& flow, long long interval_length);

/// Largest r_a for which the single-link geometric sum converges at this s.
double stability_max_rate(double s, const LinkModel& link);

/// Steady-state kernel M^w / (1 - e^{r_a s} M) with M the link's service
/// transform at 1 - s; +inf when unstable at s.
double single_hop_kernel(double s, int w, const FlowSpec& flow, const LinkModel& link);

/// End-to-end kernel of the path; reduces to single_hop_kernel for one link.
double multi_hop_kernel(double s, int w, const FlowSpec& flow, const PathModel& path,
                        const KernelOptions& options = {});

/// Links with identical (SNR, frame, model) get deterministic SNR offsets of
/// (-1)^k * k * 1e-6 dB (k = 1-based index) so that every pair is distinct.
struct PreparedPath {
    PathModel path;
    bool perturbed = false;
    double max_perturbation_db = 0.0;
};
PreparedPath separate_identical_links(const PathModel& path);

/// inf over s of the end-to-end kernel, clamped to [0, 1].
BoundResult delay_bound(const FlowSpec& flow, const PathModel& path, int w, const BoundOptions& options = {});

/// Same optimization for a single Shannon-capacity link.
BoundResult delay_bound_shannon(const FlowSpec& flow, const LinkModel& link, int w,
                                const BoundOptions& options = {});

/// Smallest w whose bound is <= epsilon; nullopt when no finite w exists.
std::optional<int> min_delay_for_epsilon(const FlowSpec& flow, const PathModel& path, double epsilon,
                                         const BoundOptions& options = {});

}  // namespace hartbound::snc

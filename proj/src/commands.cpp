#include "hartbound/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hartbound::cli {

namespace {

constexpr double kZ95 = 1.959963984540054;

std::string yes_no(bool b) { return b ? "true" : "false"; }

double superframe_ms(const ScenarioFile& sc, std::size_t hops) { return static_cast<double>(hops) * sc.slot_ms; }

std::string describe_numerics(const snc::BoundResult& r) {
    std::ostringstream out;
    const auto& spec = phy::default_q_cache().spec();
    out << "quadrature relative tolerance " << format_number(spec.relative_tolerance) << ", up to "
        << spec.max_refinements << " Gauss-Kronrod bisections";
    if (r.perturbed)
        out << "; identical links separated by up to " << format_number(r.max_perturbation_db) << " dB";
    return out.str();
}

void append_bound_rows(Table& table, const std::vector<std::string>& prefix, const snc::FlowSpec& flow,
                       const snc::PathModel& path, const std::vector<int>& targets, double sf_ms,
                       bool& any_unstable, snc::BoundResult* last = nullptr) {
    for (int w : targets) {
        const auto r = snc::delay_bound(flow, path, w);
        any_unstable = any_unstable || !r.stable;
        auto row = prefix;
        row.push_back(std::to_string(w));
        row.push_back(format_number(w * sf_ms));
        row.push_back(format_number(r.violation_probability));
        row.push_back(format_number(r.optimizing_s));
        row.push_back(yes_no(r.stable));
        table.rows.push_back(std::move(row));
        if (last) *last = r;
    }
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::out_of_range("no column " + name);
    return static_cast<std::size_t>(it - header.begin());
}

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

std::string to_csv(const Table& table) {
    std::ostringstream out;
    const auto write_row = [&out](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    };
    write_row(table.header);
    for (const auto& row : table.rows) write_row(row);
    return out.str();
}

Interval wilson_interval(std::size_t k, std::size_t n) {
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = kZ95 * kZ95;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = kZ95 * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    // The interval ends are exactly 0 and 1 at the extremes; avoid rounding residue.
    return {k == 0 ? 0.0 : std::max(0.0, center - half), k == n ? 1.0 : std::min(1.0, center + half)};
}

CommandResult cmd_bound(const ScenarioFile& scenario) {
    CommandResult result;
    result.table.header = {"w_superframes", "w_ms", "violation_bound", "optimizing_s", "stable"};
    const auto path = scenario.path_model();
    bool any_unstable = false;
    snc::BoundResult last;
    append_bound_rows(result.table, {}, scenario.flow(), path, scenario.targets,
                      superframe_ms(scenario, path.hops()), any_unstable, &last);

    std::ostringstream summary;
    summary << "bound: " << path.hops() << " hop(s), r_a = " << format_number(scenario.flow().r_a)
            << " bits/superframe, " << scenario.targets.size() << " target(s)\n";
    summary << "numerics: " << describe_numerics(last) << "\n";
    if (any_unstable) {
        summary << "unstable: no s > 0 satisfies the stability condition; bounds reported as 1\n";
        result.exit_code = kExitNumericalFailure;
    }
    result.summary = summary.str();
    return result;
}

CommandResult cmd_simulate(const ScenarioFile& scenario) {
    const auto config = scenario.sim_config();
    const auto report = sim::run(config);
    const double sf_ms = superframe_ms(scenario, config.path.hops());

    CommandResult result;
    result.table.header = {"w_superframes", "w_ms",  "empirical_violation", "violating_samples",
                           "samples",       "ci_low", "ci_high"};
    for (const auto& [w, est] : report.violation_estimates) {
        const auto k = static_cast<std::size_t>(std::llround(est.probability * static_cast<double>(est.sample_count)));
        const auto ci = wilson_interval(k, est.sample_count);
        result.table.rows.push_back({std::to_string(w), format_number(w * sf_ms), format_number(est.probability),
                                     std::to_string(k), std::to_string(est.sample_count), format_number(ci.low),
                                     format_number(ci.high)});
    }

    std::ostringstream summary;
    summary << "simulate: " << config.num_superframes << " superframes, seed " << config.seed << ", "
            << (config.forwarding == sim::Forwarding::CutThrough ? "cut-through" : "store-and-forward")
            << " forwarding\n";
    summary << "completed blocks " << report.block_delays.size() << ", unfinished " << report.unfinished_blocks
            << ", conservation " << (report.conservation_held ? "ok" : "VIOLATED") << "\n";
    for (std::size_t j = 0; j < report.per_link_success_rate.size(); ++j) {
        summary << "link " << j + 1 << ": frame success " << format_number(report.per_link_success_rate[j])
                << " (analytical Q " << format_number(phy::q_success(config.path.links[j])) << ")\n";
    }
    result.summary = summary.str();
    return result;
}

CommandResult cmd_validate(const ScenarioFile& scenario, const ValidateOptions& options) {
    const auto config = scenario.sim_config();
    const auto report = sim::run(config);
    const auto flow = scenario.flow();
    const auto path = scenario.path_model();

    CommandResult result;
    result.table.header = {"w",     "analytical_bound",  "empirical", "ci_low",
                           "ci_high", "violating_samples", "ratio",     "dominates"};
    bool all_ok = report.conservation_held;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (const auto& [w, est] : report.violation_estimates) {
        const auto bound = snc::delay_bound(flow, path, w);
        const auto k = static_cast<std::size_t>(std::llround(est.probability * static_cast<double>(est.sample_count)));
        const auto ci = wilson_interval(k, est.sample_count);
        const bool enough = k >= options.min_violations;
        const bool ok = enough ? bound.violation_probability >= est.probability
                               : bound.violation_probability >= ci.low;
        all_ok = all_ok && ok;
        const double ratio = est.probability > 0.0 ? bound.violation_probability / est.probability
                                                   : std::numeric_limits<double>::infinity();
        if (enough) min_ratio = std::min(min_ratio, ratio);
        result.table.rows.push_back({std::to_string(w), format_number(bound.violation_probability),
                                     format_number(est.probability), format_number(ci.low), format_number(ci.high),
                                     std::to_string(k), format_number(ratio), yes_no(ok)});
    }

    std::ostringstream summary;
    summary << "validate: " << path.hops() << " hop(s), " << config.num_superframes << " superframes, seed "
            << config.seed << ", "
            << (config.forwarding == sim::Forwarding::CutThrough ? "cut-through" : "store-and-forward")
            << " forwarding\n";
    if (std::isfinite(min_ratio)) summary << "smallest bound/empirical ratio " << format_number(min_ratio) << "\n";
    summary << "verdict: " << (all_ok ? "PASS" : "FAIL") << "\n";
    result.summary = summary.str();
    result.exit_code = all_ok ? kExitSuccess : kExitValidationFailure;
    return result;
}

CommandResult cmd_sweep(const ScenarioFile& scenario, const SweepSpec& sweep) {
    if (sweep.values.empty()) throw ScenarioError("sweep needs at least one value");
    CommandResult result;
    result.table.header = {"variable",     "value", "hops",   "w_superframes", "w_ms", "violation_bound",
                           "optimizing_s", "stable"};
    bool any_unstable = false;
    const auto run_point = [&](const ScenarioFile& sc, const std::string& name, double value) {
        const auto path = sc.path_model();
        append_bound_rows(result.table, {name, format_number(value), std::to_string(path.hops())}, sc.flow(), path,
                          sc.targets, superframe_ms(sc, path.hops()), any_unstable);
    };

    switch (sweep.variable) {
        case SweepVariable::PayloadBits:
            for (double v : sweep.values) {
                if (v < 0.0) throw ScenarioError("r_a sweep values must be >= 0");
                ScenarioFile sc = scenario;
                sc.r_a = v;
                run_point(sc, "r_a", v);
            }
            break;
        case SweepVariable::SnrDb:
            for (double v : sweep.values) {
                ScenarioFile sc = scenario;
                for (auto& link : sc.path) link.avg_snr_db = sweep.snr_offset ? link.avg_snr_db + v : v;
                run_point(sc, sweep.snr_offset ? "snr_offset_db" : "snr_db", v);
            }
            break;
        case SweepVariable::Hops: {
            ScenarioFile sc = scenario;
            run_point(sc, "hops", static_cast<double>(sc.path.size()));
            for (double v : sweep.values) {
                sc.path.push_back(ScenarioLink{v, std::nullopt});
                run_point(sc, "hops", static_cast<double>(sc.path.size()));
            }
            break;
        }
    }
    result.summary = "sweep: " + std::to_string(sweep.values.size()) + " value(s) x " +
                     std::to_string(scenario.targets.size()) + " target(s)\n";
    if (any_unstable) result.summary += "some sweep points are unstable (bound reported as 1)\n";
    return result;
}

CommandResult cmd_power_split(const PowerSplitSpec& spec, const ScenarioFile& scenario) {
    spec.validate();
    CommandResult result;
    result.table.header = {"hops",        "hop_distance_m", "per_node_power_dbm", "pathloss_db", "per_link_snr_db",
                           "feasible",    "w_superframes",  "w_ms",               "violation_bound",
                           "optimizing_s", "stable"};
    std::ostringstream summary;
    summary << "power-split: " << format_number(spec.total_distance_m) << " m, total "
            << format_number(spec.total_power_dbm) << " dBm; pathloss exponent " << format_number(spec.pathloss.exponent)
            << ", " << format_number(spec.pathloss.reference_loss_db) << " dB at "
            << format_number(spec.pathloss.reference_distance_m) << " m, noise floor "
            << format_number(spec.noise_floor_dbm) << " dBm (configurable defaults, not measured)\n";

    bool any_unstable = false;
    for (int h = 1; h <= spec.num_hops; ++h) {
        const double hop_distance = spec.total_distance_m / h;
        const double power = spec.total_power_dbm - 10.0 * std::log10(static_cast<double>(h));
        const double pathloss = spec.pathloss.reference_loss_db +
                                10.0 * spec.pathloss.exponent * std::log10(hop_distance / spec.pathloss.reference_distance_m);
        const double snr_db = power - pathloss - spec.noise_floor_dbm;
        const double snr_linear = phy::db_to_linear(snr_db);
        const bool feasible = std::isfinite(snr_db) && snr_linear > 0.0 && std::isfinite(snr_linear);
        const std::vector<std::string> prefix = {std::to_string(h), format_number(hop_distance), format_number(power),
                                                 format_number(pathloss), format_number(snr_db), yes_no(feasible)};
        if (!feasible) {
            for (int w : scenario.targets) {
                auto row = prefix;
                row.insert(row.end(), {std::to_string(w), "", "1", "", "false"});
                result.table.rows.push_back(std::move(row));
            }
            continue;
        }
        ScenarioFile sc = scenario;
        sc.path.assign(static_cast<std::size_t>(h), ScenarioLink{snr_db, std::nullopt});
        const auto path = sc.path_model();
        append_bound_rows(result.table, prefix, sc.flow(), path, sc.targets, superframe_ms(sc, path.hops()),
                          any_unstable);
        summary << h << " hop(s): " << format_number(snr_db) << " dB per link\n";
    }
    if (any_unstable) summary << "some configurations are unstable (bound reported as 1)\n";
    result.summary = summary.str();
    return result;
}

CommandResult cmd_compare_shannon(const ScenarioFile& scenario) {
    const auto config = scenario.sim_config();
    const auto report = sim::run(config);
    const auto flow = scenario.flow();
    const auto ieee = scenario.path_model(ModelKind::Ieee802154);
    const auto shannon = scenario.path_model(ModelKind::Shannon);

    CommandResult result;
    result.table.header = {"w_superframes", "bound_802154", "bound_shannon", "empirical", "violating_samples",
                           "shannon_below_empirical"};
    bool ordered = true;
    std::vector<int> below;
    for (const auto& [w, est] : report.violation_estimates) {
        const auto b_ieee = snc::delay_bound(flow, ieee, w);
        const auto b_sh = snc::delay_bound(flow, shannon, w);
        const auto k = static_cast<std::size_t>(std::llround(est.probability * static_cast<double>(est.sample_count)));
        ordered = ordered && b_sh.violation_probability <= b_ieee.violation_probability;
        const bool sh_below = b_sh.violation_probability < est.probability;
        if (sh_below) below.push_back(w);
        result.table.rows.push_back({std::to_string(w), format_number(b_ieee.violation_probability),
                                     format_number(b_sh.violation_probability), format_number(est.probability),
                                     std::to_string(k), yes_no(sh_below)});
    }
    std::ostringstream summary;
    summary << "compare-shannon: C = " << scenario.symbols_per_slot << " symbols/slot, " << ieee.hops() << " hop(s)\n";
    summary << "Shannon bound <= 802.15.4 bound on every row: " << (ordered ? "yes" : "NO") << "\n";
    summary << "targets where the simulation exceeds the Shannon bound:";
    if (below.empty()) summary << " none";
    for (int w : below) summary << ' ' << w;
    summary << "\n";
    result.summary = summary.str();
    result.exit_code = ordered ? kExitSuccess : kExitValidationFailure;
    return result;
}

}  // namespace hartbound::cli

// hartbound: delay-bound analysis and superframe simulation for multi-hop
// TDMA / channel-hopping 802.15.4 networks.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hartbound/commands.hpp"

namespace {

using namespace hartbound;

struct CommonOptions {
    std::string scenario_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::vector<int> targets;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--scenario", opts.scenario_path, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_path, "Write the CSV table here instead of standard output");
    cmd->add_option("--seed", opts.seed, "Override the scenario's simulation seed");
    cmd->add_option("--targets", opts.targets, "Comma-separated target delays in superframes")->delimiter(',');
}

cli::ScenarioFile load(const CommonOptions& opts) {
    auto sc = cli::load_scenario(opts.scenario_path);
    if (opts.seed) sc.sim.seed = *opts.seed;
    if (!opts.targets.empty()) {
        for (int w : opts.targets)
            if (w < 0) throw cli::ScenarioError("--targets entries must be >= 0");
        sc.targets = opts.targets;
    }
    return sc;
}

int emit(const cli::CommandResult& result, const CommonOptions& opts) {
    const std::string csv = cli::to_csv(result.table);
    if (opts.out_path.empty()) {
        std::cout << csv;
        std::cerr << result.summary;
    } else {
        std::ofstream out(opts.out_path);
        if (!out) {
            std::cerr << "error: cannot write '" << opts.out_path << "'\n";
            return cli::kExitInputError;
        }
        out << csv;
        std::cout << result.summary;
    }
    return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Statistical end-to-end delay bounds for multi-hop 802.15.4 TDMA paths"};
    app.require_subcommand(1);

    CommonOptions bound_opts, simulate_opts, validate_opts, sweep_opts, power_opts, shannon_opts;
    auto* bound = app.add_subcommand("bound", "Analytical delay violation bound per target delay");
    add_common(bound, bound_opts);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo superframe simulation");
    add_common(simulate, simulate_opts);

    auto* validate = app.add_subcommand("validate", "Overlay bound and simulation; fail if the bound is undercut");
    add_common(validate, validate_opts);
    std::size_t min_violations = 50;
    validate->add_option("--min-violations", min_violations,
                         "Violating samples needed before the point estimate is compared directly");

    auto* sweep = app.add_subcommand("sweep", "Bound as a function of r_a, SNR or hop count");
    add_common(sweep, sweep_opts);
    std::string variable;
    std::vector<double> values;
    bool snr_offset = false;
    sweep->add_option("--variable", variable, "r_a | snr_db | hops")
        ->required()
        ->check(CLI::IsMember({"r_a", "snr_db", "hops"}));
    sweep->add_option("--values", values, "Comma-separated values (for hops: SNRs in dB of appended links)")
        ->required()
        ->delimiter(',');
    sweep->add_flag("--offset", snr_offset, "snr_db values are offsets added to every link");

    auto* power = app.add_subcommand("power-split", "Compare 1..N equally spaced hops sharing a power budget");
    add_common(power, power_opts);
    std::optional<double> distance, total_power, exponent, reference_loss, reference_distance, noise_floor;
    std::optional<int> max_hops;
    power->add_option("--distance", distance, "Source-destination distance in m");
    power->add_option("--max-hops", max_hops, "Largest hop count to evaluate");
    power->add_option("--total-power", total_power, "Total transmit power in dBm");
    power->add_option("--pathloss-exponent", exponent);
    power->add_option("--reference-loss", reference_loss, "Pathloss in dB at the reference distance");
    power->add_option("--reference-distance", reference_distance, "Reference distance in m");
    power->add_option("--noise-floor", noise_floor, "Noise floor in dBm");

    auto* shannon = app.add_subcommand("compare-shannon", "802.15.4 bound vs. Shannon-capacity bound vs. simulation");
    add_common(shannon, shannon_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitInputError;
    }

    try {
        if (*bound) return emit(cli::cmd_bound(load(bound_opts)), bound_opts);
        if (*simulate) return emit(cli::cmd_simulate(load(simulate_opts)), simulate_opts);
        if (*validate) return emit(cli::cmd_validate(load(validate_opts), {min_violations}), validate_opts);
        if (*sweep) {
            cli::SweepSpec spec;
            spec.variable = variable == "r_a"      ? cli::SweepVariable::PayloadBits
                            : variable == "snr_db" ? cli::SweepVariable::SnrDb
                                                   : cli::SweepVariable::Hops;
            spec.values = values;
            spec.snr_offset = snr_offset;
            return emit(cli::cmd_sweep(load(sweep_opts), spec), sweep_opts);
        }
        if (*power) {
            const auto sc = load(power_opts);
            cli::PowerSplitSpec spec = sc.power_split.value_or(cli::PowerSplitSpec{});
            if (distance) spec.total_distance_m = *distance;
            if (max_hops) spec.num_hops = *max_hops;
            if (total_power) spec.total_power_dbm = *total_power;
            if (exponent) spec.pathloss.exponent = *exponent;
            if (reference_loss) spec.pathloss.reference_loss_db = *reference_loss;
            if (reference_distance) spec.pathloss.reference_distance_m = *reference_distance;
            if (noise_floor) spec.noise_floor_dbm = *noise_floor;
            return emit(cli::cmd_power_split(spec, sc), power_opts);
        }
        if (*shannon) return emit(cli::cmd_compare_shannon(load(shannon_opts)), shannon_opts);
    } catch (const cli::ScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitInputError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return cli::kExitNumericalFailure;
    }
    return cli::kExitInputError;
}

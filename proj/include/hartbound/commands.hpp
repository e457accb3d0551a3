#pragma once

// Implementations behind the CLI subcommands. Each returns a CSV table, a
// human-readable summary and the process exit code it maps to.

#include <string>
#include <vector>

#include "hartbound/scenario.hpp"

namespace hartbound::cli {

enum ExitCode : int {
    kExitSuccess = 0,
    kExitValidationFailure = 1,
    kExitInputError = 2,
    kExitNumericalFailure = 3,
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
};

struct CommandResult {
    Table table;
    std::string summary;
    int exit_code = kExitSuccess;
};

/// 12 significant digits, the precision of every number in CSV output.
std::string format_number(double value);
std::string to_csv(const Table& table);

struct Interval {
    double low;
    double high;
};
/// Wilson score interval at 95% for k successes in n trials.
Interval wilson_interval(std::size_t k, std::size_t n);

CommandResult cmd_bound(const ScenarioFile& scenario);
CommandResult cmd_simulate(const ScenarioFile& scenario);

struct ValidateOptions {
    // Rows with fewer violating samples only need the bound to clear the CI lower end.
    std::size_t min_violations = 50;
};
CommandResult cmd_validate(const ScenarioFile& scenario, const ValidateOptions& options = {});

enum class SweepVariable { PayloadBits, SnrDb, Hops };

struct SweepSpec {
    SweepVariable variable = SweepVariable::PayloadBits;
    // r_a in the scenario's payload unit, SNR in dB, or for `hops` the SNRs (dB)
    // of links appended one at a time to the scenario path.
    std::vector<double> values;
    // For SnrDb: add each value to every link's SNR instead of overwriting it.
    bool snr_offset = false;
};
CommandResult cmd_sweep(const ScenarioFile& scenario, const SweepSpec& sweep);

/// Compares 1..num_hops equally spaced relays over a fixed distance with the
/// total transmit power split evenly between the senders.
CommandResult cmd_power_split(const PowerSplitSpec& spec, const ScenarioFile& scenario);

CommandResult cmd_compare_shannon(const ScenarioFile& scenario);

}  // namespace hartbound::cli

#pragma once

// Scenario files: a versioned JSON description of one flow over one path,
// plus simulation and sweep settings. Parsing is strict; any key outside the
// schema is rejected by name.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hartbound/sim.hpp"
#include "hartbound/snc.hpp"

namespace hartbound::cli {

inline constexpr int kScenarioSchemaVersion = 1;

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ModelKind { Ieee802154, Shannon };
enum class PayloadUnit { Bits, Bytes };

struct ScenarioLink {
    double avg_snr_db = 0.0;
    std::optional<int> k_a;  // overrides defaults.k_a
    friend bool operator==(const ScenarioLink&, const ScenarioLink&) = default;
};

struct SimSection {
    std::int64_t num_superframes = 100000;
    std::uint64_t seed = 1;
    std::int64_t warmup = 0;
    sim::Forwarding forwarding = sim::Forwarding::CutThrough;
    friend bool operator==(const SimSection&, const SimSection&) = default;
};

// Log-distance pathloss. The defaults are engineering placeholders, not
// measured values: PL(d) = reference_loss_db + 10 * exponent * log10(d / d0).
struct PathlossModel {
    double exponent = 3.0;
    double reference_loss_db = 40.0;
    double reference_distance_m = 1.0;
    friend bool operator==(const PathlossModel&, const PathlossModel&) = default;
};

struct PowerSplitSpec {
    double total_distance_m = 30.0;
    int num_hops = 5;
    double total_power_dbm = 4.0;
    PathlossModel pathloss;
    double noise_floor_dbm = -95.0;

    void validate() const;
    friend bool operator==(const PowerSplitSpec&, const PowerSplitSpec&) = default;
};

struct ScenarioFile {
    int schema_version = kScenarioSchemaVersion;
    double r_a = 0.0;
    PayloadUnit unit = PayloadUnit::Bits;
    std::vector<ScenarioLink> path;
    int default_k_a = 1016;
    double slot_ms = 10.0;
    ModelKind model = ModelKind::Ieee802154;
    int symbols_per_slot = 625;
    SimSection sim;
    std::vector<int> targets;
    std::optional<PowerSplitSpec> power_split;

    snc::FlowSpec flow() const;
    /// Path with every link using the scenario's service model.
    snc::PathModel path_model() const;
    /// Same links with an explicit service model.
    snc::PathModel path_model(ModelKind kind) const;
    sim::SimConfig sim_config() const;

    friend bool operator==(const ScenarioFile&, const ScenarioFile&) = default;
};

ScenarioFile parse_scenario(std::string_view json_text);
ScenarioFile load_scenario(const std::string& file_path);
std::string serialize_scenario(const ScenarioFile& scenario);

}  // namespace hartbound::cli

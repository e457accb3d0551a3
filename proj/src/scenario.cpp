#include "hartbound/scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace hartbound::cli {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ScenarioError("'" + where + "' must be an object");
}

void reject_unknown_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (auto a : allowed) known = known || key == a;
        if (!known) throw ScenarioError("unknown key '" + key + "' in " + where);
    }
}

double get_number(const json& j, const std::string& key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_number()) throw ScenarioError("'" + where + "." + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ScenarioError("'" + where + "." + key + "' must be finite");
    return d;
}

template <typename Int>
Int get_integer(const json& j, const std::string& key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ScenarioError("'" + where + "." + key + "' must be an integer");
    if constexpr (std::is_unsigned_v<Int>) {
        if (v.is_number_unsigned()) return v.get<Int>();
        if (v.get<std::int64_t>() < 0) throw ScenarioError("'" + where + "." + key + "' must be >= 0");
    }
    return v.get<Int>();
}

std::string get_string(const json& j, const std::string& key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_string()) throw ScenarioError("'" + where + "." + key + "' must be a string");
    return v.get<std::string>();
}

std::string forwarding_name(sim::Forwarding f) {
    return f == sim::Forwarding::CutThrough ? "cut-through" : "store-and-forward";
}

PowerSplitSpec parse_power_split(const json& j) {
    require_object(j, "power_split");
    reject_unknown_keys(j, "power_split",
                        {"total_distance_m", "num_hops", "total_power_dbm", "pathloss", "noise_floor_dbm"});
    PowerSplitSpec spec;
    if (j.contains("total_distance_m")) spec.total_distance_m = get_number(j, "total_distance_m", "power_split");
    if (j.contains("num_hops")) spec.num_hops = get_integer<int>(j, "num_hops", "power_split");
    if (j.contains("total_power_dbm")) spec.total_power_dbm = get_number(j, "total_power_dbm", "power_split");
    if (j.contains("noise_floor_dbm")) spec.noise_floor_dbm = get_number(j, "noise_floor_dbm", "power_split");
    if (j.contains("pathloss")) {
        const auto& pl = j.at("pathloss");
        require_object(pl, "power_split.pathloss");
        reject_unknown_keys(pl, "power_split.pathloss", {"exponent", "reference_loss_db", "reference_distance_m"});
        const std::string where = "power_split.pathloss";
        if (pl.contains("exponent")) spec.pathloss.exponent = get_number(pl, "exponent", where);
        if (pl.contains("reference_loss_db")) spec.pathloss.reference_loss_db = get_number(pl, "reference_loss_db", where);
        if (pl.contains("reference_distance_m"))
            spec.pathloss.reference_distance_m = get_number(pl, "reference_distance_m", where);
    }
    spec.validate();
    return spec;
}

ScenarioFile from_json(const json& root) {
    require_object(root, "scenario");
    reject_unknown_keys(root, "scenario",
                        {"schema_version", "flow", "path", "defaults", "model", "sim", "targets", "power_split"});
    ScenarioFile sc;

    if (!root.contains("schema_version")) throw ScenarioError("missing required key 'schema_version'");
    sc.schema_version = get_integer<int>(root, "schema_version", "scenario");
    if (sc.schema_version != kScenarioSchemaVersion)
        throw ScenarioError("unsupported schema_version " + std::to_string(sc.schema_version));

    if (!root.contains("flow")) throw ScenarioError("missing required key 'flow'");
    const auto& flow = root.at("flow");
    require_object(flow, "flow");
    reject_unknown_keys(flow, "flow", {"r_a", "unit"});
    if (!flow.contains("r_a")) throw ScenarioError("missing required key 'flow.r_a'");
    sc.r_a = get_number(flow, "r_a", "flow");
    if (sc.r_a < 0.0) throw ScenarioError("'flow.r_a' must be >= 0");
    if (flow.contains("unit")) {
        const auto unit = get_string(flow, "unit", "flow");
        if (unit == "bits")
            sc.unit = PayloadUnit::Bits;
        else if (unit == "bytes")
            sc.unit = PayloadUnit::Bytes;
        else
            throw ScenarioError("'flow.unit' must be \"bits\" or \"bytes\"");
    }

    if (root.contains("defaults")) {
        const auto& d = root.at("defaults");
        require_object(d, "defaults");
        reject_unknown_keys(d, "defaults", {"k_a", "slot_ms"});
        if (d.contains("k_a")) sc.default_k_a = get_integer<int>(d, "k_a", "defaults");
        if (d.contains("slot_ms")) sc.slot_ms = get_number(d, "slot_ms", "defaults");
        if (sc.default_k_a < 1) throw ScenarioError("'defaults.k_a' must be >= 1");
        if (!(sc.slot_ms > 0.0)) throw ScenarioError("'defaults.slot_ms' must be > 0");
    }

    if (!root.contains("path")) throw ScenarioError("missing required key 'path'");
    const auto& path = root.at("path");
    if (!path.is_array() || path.empty()) throw ScenarioError("'path' must be a non-empty array of links");
    for (std::size_t i = 0; i < path.size(); ++i) {
        const std::string where = "path[" + std::to_string(i) + "]";
        const auto& l = path[i];
        require_object(l, where);
        reject_unknown_keys(l, where, {"avg_snr_db", "k_a"});
        if (!l.contains("avg_snr_db")) throw ScenarioError("missing required key '" + where + ".avg_snr_db'");
        ScenarioLink link;
        link.avg_snr_db = get_number(l, "avg_snr_db", where);
        if (l.contains("k_a")) {
            link.k_a = get_integer<int>(l, "k_a", where);
            if (*link.k_a < 1) throw ScenarioError("'" + where + ".k_a' must be >= 1");
        }
        sc.path.push_back(link);
    }

    if (root.contains("model")) {
        const auto& m = root.at("model");
        require_object(m, "model");
        reject_unknown_keys(m, "model", {"kind", "symbols_per_slot"});
        const auto kind = get_string(m, "kind", "model");
        if (kind == "ieee802154")
            sc.model = ModelKind::Ieee802154;
        else if (kind == "shannon")
            sc.model = ModelKind::Shannon;
        else
            throw ScenarioError("'model.kind' must be \"ieee802154\" or \"shannon\"");
        if (m.contains("symbols_per_slot")) sc.symbols_per_slot = get_integer<int>(m, "symbols_per_slot", "model");
        if (sc.symbols_per_slot < 1) throw ScenarioError("'model.symbols_per_slot' must be >= 1");
    }

    if (root.contains("sim")) {
        const auto& s = root.at("sim");
        require_object(s, "sim");
        reject_unknown_keys(s, "sim", {"num_superframes", "seed", "warmup", "forwarding"});
        if (s.contains("num_superframes")) sc.sim.num_superframes = get_integer<std::int64_t>(s, "num_superframes", "sim");
        if (s.contains("seed")) sc.sim.seed = get_integer<std::uint64_t>(s, "seed", "sim");
        if (s.contains("warmup")) sc.sim.warmup = get_integer<std::int64_t>(s, "warmup", "sim");
        if (s.contains("forwarding")) {
            const auto f = get_string(s, "forwarding", "sim");
            if (f == "cut-through")
                sc.sim.forwarding = sim::Forwarding::CutThrough;
            else if (f == "store-and-forward")
                sc.sim.forwarding = sim::Forwarding::StoreAndForward;
            else
                throw ScenarioError("'sim.forwarding' must be \"cut-through\" or \"store-and-forward\"");
        }
        if (sc.sim.num_superframes < 1) throw ScenarioError("'sim.num_superframes' must be >= 1");
        if (sc.sim.warmup < 0 || sc.sim.warmup >= sc.sim.num_superframes)
            throw ScenarioError("'sim.warmup' must satisfy 0 <= warmup < num_superframes");
    }

    if (root.contains("targets")) {
        const auto& t = root.at("targets");
        if (!t.is_array()) throw ScenarioError("'targets' must be an array of integers");
        for (const auto& v : t) {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
                throw ScenarioError("'targets' entries must be integers >= 0");
            sc.targets.push_back(v.get<int>());
        }
    } else {
        for (int w = 0; w <= 30; ++w) sc.targets.push_back(w);
    }

    if (root.contains("power_split")) sc.power_split = parse_power_split(root.at("power_split"));
    return sc;
}

json to_json_value(const ScenarioFile& sc) {
    json root;
    root["schema_version"] = sc.schema_version;
    root["flow"] = {{"r_a", sc.r_a}, {"unit", sc.unit == PayloadUnit::Bits ? "bits" : "bytes"}};
    root["defaults"] = {{"k_a", sc.default_k_a}, {"slot_ms", sc.slot_ms}};
    json path = json::array();
    for (const auto& l : sc.path) {
        json link = {{"avg_snr_db", l.avg_snr_db}};
        if (l.k_a) link["k_a"] = *l.k_a;
        path.push_back(link);
    }
    root["path"] = path;
    root["model"] = {{"kind", sc.model == ModelKind::Ieee802154 ? "ieee802154" : "shannon"},
                     {"symbols_per_slot", sc.symbols_per_slot}};
    root["sim"] = {{"num_superframes", sc.sim.num_superframes},
                   {"seed", sc.sim.seed},
                   {"warmup", sc.sim.warmup},
                   {"forwarding", forwarding_name(sc.sim.forwarding)}};
    root["targets"] = sc.targets;
    if (sc.power_split) {
        const auto& p = *sc.power_split;
        root["power_split"] = {{"total_distance_m", p.total_distance_m},
                               {"num_hops", p.num_hops},
                               {"total_power_dbm", p.total_power_dbm},
                               {"noise_floor_dbm", p.noise_floor_dbm},
                               {"pathloss",
                                {{"exponent", p.pathloss.exponent},
                                 {"reference_loss_db", p.pathloss.reference_loss_db},
                                 {"reference_distance_m", p.pathloss.reference_distance_m}}}};
    }
    return root;
}

}  // namespace

void PowerSplitSpec::validate() const {
    if (!(total_distance_m > 0.0)) throw ScenarioError("'power_split.total_distance_m' must be > 0");
    if (num_hops < 1) throw ScenarioError("'power_split.num_hops' must be >= 1");
    if (!(pathloss.reference_distance_m > 0.0))
        throw ScenarioError("'power_split.pathloss.reference_distance_m' must be > 0");
}

snc::FlowSpec ScenarioFile::flow() const { return {unit == PayloadUnit::Bytes ? 8.0 * r_a : r_a}; }

snc::PathModel ScenarioFile::path_model() const { return path_model(model); }

snc::PathModel ScenarioFile::path_model(ModelKind kind) const {
    snc::PathModel out;
    for (const auto& l : path) {
        phy::LinkModel link;
        link.avg_snr = phy::Snr::from_db(l.avg_snr_db);
        link.frame.k_a = l.k_a.value_or(default_k_a);
        link.frame.slot_duration = slot_ms / 1000.0;
        if (kind == ModelKind::Shannon)
            link.kind = phy::Shannon{symbols_per_slot};
        else
            link.kind = phy::Ieee802154{};
        out.links.push_back(link);
    }
    return out;
}

sim::SimConfig ScenarioFile::sim_config() const {
    sim::SimConfig cfg;
    cfg.path = path_model(ModelKind::Ieee802154);
    cfg.flow = flow();
    cfg.num_superframes = sim.num_superframes;
    cfg.seed = sim.seed;
    cfg.warmup_superframes = sim.warmup;
    cfg.target_delays = targets;
    cfg.forwarding = sim.forwarding;
    return cfg;
}

ScenarioFile parse_scenario(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(std::string("malformed scenario JSON: ") + e.what());
    }
    try {
        return from_json(root);
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("invalid scenario: ") + e.what());
    }
}

ScenarioFile load_scenario(const std::string& file_path) {
    std::ifstream in(file_path);
    if (!in) throw ScenarioError("cannot open scenario file '" + file_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string serialize_scenario(const ScenarioFile& scenario) { return to_json_value(scenario).dump(2) + "\n"; }

}  // namespace hartbound::cli

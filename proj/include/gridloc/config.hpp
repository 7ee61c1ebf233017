#pragma once

// Scenario configuration files (JSON) and the built-in orchard presets.
//
// A config is one JSON object. "preset" picks a base scenario; every other key
// overrides a single field. Unknown keys are rejected.
//
//   {
//     "preset": "orchard_20ha_d7_l8",
//     "name": "my_run", "field_ha": 20, "cell_size_m": 30,
//     "placement": "grid" | "random", "density_per_ha": 7, "node_count": 0,
//     "grid_spacing_m": 0, "landmark_count": 8,
//     "ptx_dbm_unknown": 15, "ptx_dbm_landmark": 15, "ptx_dbm_max": 15,
//     "sensitivity_dbm": -103, "range_node_m": 120, "range_landmark_m": 220,
//     "seed": 1, "trials": 10, "max_steps": 20, "hop_limit": 8,
//     "node_channel": {"mode": "below_canopy", "pl0_db": 75, "n": 3.61, "sigma_db": 5.27, "d0_m": 1},
//     "landmark_channel": {"mode": "above_canopy"},
//     "codec": {"enabled": false, "payload_limit": 102},
//     "heatmap_nodes": [10, 20]
//   }

#include "gridloc/channel.hpp"
#include "gridloc/deployment.hpp"
#include "gridloc/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace gridloc {

/// Orchard presets: orchard_<6|20>ha_d<3|7>_l<2|3|4|6|8>, grid deployment, full power.
inline std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (int ha : {6, 20})
        for (int d : {3, 7})
            for (int l : {2, 3, 4, 6, 8})
                out.push_back("orchard_" + std::to_string(ha) + "ha_d" + std::to_string(d) + "_l" + std::to_string(l));
    return out;
}

inline ScenarioConfig preset(const std::string& name) {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw ConfigError("unknown preset '" + name + "'");
    ScenarioConfig cfg;
    cfg.name = name;
    int ha = 0, d = 0, l = 0;
    std::sscanf(name.c_str(), "orchard_%dha_d%d_l%d", &ha, &d, &l);
    cfg.field_ha = ha;
    cfg.density_per_ha = d;
    cfg.landmark_count = l;
    return cfg;
}

namespace detail {

inline CanopyMode parse_mode(const std::string& s) {
    if (s == "below_canopy") return CanopyMode::BelowCanopy;
    if (s == "above_canopy") return CanopyMode::AboveCanopy;
    throw ConfigError("channel mode must be below_canopy or above_canopy, got '" + s + "'");
}

inline PathLossModel parse_channel(const nlohmann::json& j, PathLossModel base, const std::string& key) {
    if (!j.is_object()) throw ConfigError("'" + key + "' must be an object");
    if (j.contains("mode")) base = PathLossModel::preset(parse_mode(j.at("mode").get<std::string>()), base.d0_m);
    for (const auto& [k, v] : j.items()) {
        if (k == "mode") continue;
        else if (k == "pl0_db") base.pl0_db = v.get<double>();
        else if (k == "n") base.n = v.get<double>();
        else if (k == "sigma_db") base.sigma_db = v.get<double>();
        else if (k == "d0_m") base.d0_m = v.get<double>();
        else throw ConfigError("unknown key '" + key + "." + k + "'");
    }
    return base;
}

inline std::string line_info(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n');
    const auto last_nl = text.rfind('\n', byte == 0 ? 0 : byte - 1);
    const auto col = last_nl == std::string::npos ? byte : byte - last_nl - 1;
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

} // namespace detail

inline ScenarioConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error at " + detail::line_info(text, e.byte == 0 ? 0 : e.byte - 1) + ": " +
                          e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    ScenarioConfig cfg = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : ScenarioConfig{};
    try {
        for (const auto& [k, v] : j.items()) {
            if (k == "preset") continue;
            else if (k == "name") cfg.name = v.get<std::string>();
            else if (k == "field_ha") cfg.field_ha = v.get<double>();
            else if (k == "cell_size_m") cfg.cell_size_m = v.get<double>();
            else if (k == "placement") {
                const auto p = v.get<std::string>();
                if (p == "grid") cfg.placement = Placement::Grid;
                else if (p == "random") cfg.placement = Placement::Random;
                else throw ConfigError("placement must be grid or random, got '" + p + "'");
            }
            else if (k == "density_per_ha") cfg.density_per_ha = v.get<double>();
            else if (k == "node_count") cfg.node_count = v.get<int>();
            else if (k == "grid_spacing_m") cfg.grid_spacing_m = v.get<double>();
            else if (k == "landmark_count") cfg.landmark_count = v.get<int>();
            else if (k == "ptx_dbm_unknown") cfg.ptx_dbm_unknown = v.get<double>();
            else if (k == "ptx_dbm_landmark") cfg.ptx_dbm_landmark = v.get<double>();
            else if (k == "ptx_dbm_max") cfg.ptx_dbm_max = v.get<double>();
            else if (k == "sensitivity_dbm") cfg.sensitivity_dbm = v.get<double>();
            else if (k == "range_node_m") cfg.range_node_m = v.get<double>();
            else if (k == "range_landmark_m") cfg.range_landmark_m = v.get<double>();
            else if (k == "seed") cfg.seed = v.get<std::uint64_t>();
            else if (k == "trials") cfg.trials = v.get<int>();
            else if (k == "max_steps") cfg.max_steps = v.get<int>();
            else if (k == "hop_limit") cfg.hop_limit = v.get<int>();
            else if (k == "node_channel") cfg.node_model = detail::parse_channel(v, cfg.node_model, k);
            else if (k == "landmark_channel") cfg.landmark_model = detail::parse_channel(v, cfg.landmark_model, k);
            else if (k == "codec") {
                for (const auto& [ck, cv] : v.items()) {
                    if (ck == "enabled") cfg.codec_enabled = cv.get<bool>();
                    else if (ck == "payload_limit") cfg.payload_limit = cv.get<int>();
                    else throw ConfigError("unknown key 'codec." + ck + "'");
                }
            }
            else if (k == "heatmap_nodes") cfg.heatmap_nodes = v.get<std::vector<int>>();
            else throw ConfigError("unknown config key '" + k + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config value has the wrong type: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

inline nlohmann::json to_json(const PathLossModel& m) {
    return {{"pl0_db", m.pl0_db}, {"n", m.n}, {"sigma_db", m.sigma_db}, {"d0_m", m.d0_m}};
}

/// Full, explicit echo of a config (no preset indirection).
inline nlohmann::json to_json(const ScenarioConfig& c) {
    return {{"name", c.name},
            {"field_ha", c.field_ha},
            {"cell_size_m", c.cell_size_m},
            {"placement", c.placement == Placement::Grid ? "grid" : "random"},
            {"density_per_ha", c.density_per_ha},
            {"node_count", c.node_count},
            {"grid_spacing_m", c.grid_spacing_m},
            {"landmark_count", c.landmark_count},
            {"ptx_dbm_unknown", c.ptx_dbm_unknown},
            {"ptx_dbm_landmark", c.ptx_dbm_landmark},
            {"ptx_dbm_max", c.ptx_dbm_max},
            {"sensitivity_dbm", c.sensitivity_dbm},
            {"range_node_m", c.range_node_m},
            {"range_landmark_m", c.range_landmark_m},
            {"seed", c.seed},
            {"trials", c.trials},
            {"max_steps", c.max_steps},
            {"hop_limit", c.hop_limit},
            {"node_channel", to_json(c.node_model)},
            {"landmark_channel", to_json(c.landmark_model)},
            {"codec", {{"enabled", c.codec_enabled}, {"payload_limit", c.payload_limit}}},
            {"heatmap_nodes", c.heatmap_nodes}};
}

} // namespace gridloc

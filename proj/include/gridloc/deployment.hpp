#pragma once

#include "gridloc/channel.hpp"
#include "gridloc/errors.hpp"
#include "gridloc/field_grid.hpp"
#include "gridloc/random.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace gridloc {

enum class NodeRole { Landmark, Unknown };
enum class Placement { Grid, Random };

struct Node {
    int id = 0;
    NodeRole role = NodeRole::Unknown;
    Coord true_position;
    double ptx_dbm = 15.0;
    LocationPmf pmf;

    bool is_landmark() const { return role == NodeRole::Landmark; }
};

/// Every knob of a deployment scenario. Defaults follow the 20 ha orchard,
/// 7 nodes/ha, 8 gateway setup at full transmit power.
struct ScenarioConfig {
    std::string name = "orchard_20ha_d7_l8";
    double field_ha = 20.0;
    double cell_size_m = 30.0;
    Placement placement = Placement::Grid;
    double density_per_ha = 7.0;
    int node_count = 0;          // > 0 overrides the density for random placement
    double grid_spacing_m = 0.0; // <= 0 derives 100 / sqrt(density)
    int landmark_count = 8;
    double ptx_dbm_unknown = 15.0;
    double ptx_dbm_landmark = 15.0;
    double ptx_dbm_max = 15.0;   // transmit power at which range_node_m applies
    double sensitivity_dbm = -103.0;
    double range_node_m = 120.0;
    double range_landmark_m = 220.0;
    PathLossModel node_model = PathLossModel::preset(CanopyMode::BelowCanopy);
    PathLossModel landmark_model = PathLossModel::preset(CanopyMode::AboveCanopy);
    std::uint64_t seed = 1;
    int trials = 10;
    int max_steps = 20;
    int hop_limit = 8;
    bool codec_enabled = false;
    int payload_limit = 102;
    std::vector<int> heatmap_nodes;

    void validate() const;
};

struct Scenario {
    GridField field;
    PathLossModel model_node;
    PathLossModel model_landmark;
    std::vector<Node> nodes;
    double range_node_m = 120.0;
    double range_landmark_m = 220.0;
    std::uint64_t seed = 1;
    int max_steps = 20;
    int hop_limit = 8;

    int landmark_count() const {
        int n = 0;
        for (const Node& node : nodes) n += node.is_landmark() ? 1 : 0;
        return n;
    }
};

/// Symmetric adjacency lists, each sorted by node id.
struct ConnectivityGraph {
    std::vector<std::vector<int>> adjacency;

    std::size_t size() const { return adjacency.size(); }
    const std::vector<int>& neighbors(int id) const { return adjacency[static_cast<std::size_t>(id)]; }

    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& a : adjacency) n += a.size();
        return n / 2;
    }
};

struct DegreeStats {
    double avg_landmark_degree = 0.0;
    double avg_unknown_degree = 0.0;
};

inline void ScenarioConfig::validate() const {
    if (!(field_ha > 0.0)) throw ConfigError("field_ha must be positive");
    if (!(cell_size_m > 0.0)) throw ConfigError("cell_size_m must be positive");
    if (!(range_node_m > 0.0) || !(range_landmark_m > 0.0)) throw ConfigError("ranges must be positive");
    if (placement == Placement::Random && node_count <= 0 && !(density_per_ha > 0.0))
        throw ConfigError("random placement needs density_per_ha or node_count");
    if (placement == Placement::Grid && grid_spacing_m <= 0.0 && !(density_per_ha > 0.0))
        throw ConfigError("grid placement needs grid_spacing_m or density_per_ha");
    if (landmark_count != 2 && landmark_count != 3 && landmark_count != 4 && landmark_count != 6 && landmark_count != 8)
        throw ConfigError("landmark_count must be one of 2, 3, 4, 6, 8");
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
    if (hop_limit < 0) throw ConfigError("hop_limit must be non-negative");
    if (payload_limit < 1) throw ConfigError("payload_limit must be positive");
    node_model.validate();
    landmark_model.validate();
}

/// Regular lattice of floor(side / spacing) points per edge, centred in the field.
inline std::vector<Coord> place_grid(const GridField& field, double spacing_m) {
    if (!(spacing_m > 0.0) || spacing_m > field.side_length())
        throw EmptyDeployment("grid spacing " + std::to_string(spacing_m) + " m does not fit the field");
    const int per_edge = static_cast<int>(std::floor(field.side_length() / spacing_m + 1e-9));
    const double margin = (field.side_length() - (per_edge - 1) * spacing_m) / 2.0;
    std::vector<Coord> out;
    out.reserve(static_cast<std::size_t>(per_edge * per_edge));
    for (int r = 0; r < per_edge; ++r)
        for (int c = 0; c < per_edge; ++c)
            out.push_back({field.origin().x + margin + c * spacing_m, field.origin().y + margin + r * spacing_m});
    return out;
}

inline std::vector<Coord> place_random(const GridField& field, int count, RandomStream& rng) {
    if (count < 1) throw EmptyDeployment("random placement needs at least one node");
    const double side = field.side_length();
    std::vector<Coord> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double x = rng.uniform(0.0, side);
        const double y = rng.uniform(0.0, side);
        out.push_back({field.origin().x + x, field.origin().y + y});
    }
    return out;
}

/// Border/corner gateway layouts, inset 1 m from the field edge.
///   2: midpoints of the left and right edges
///   3: the two bottom corners and the top-edge midpoint
///   4: corners
///   6: corners plus bottom and top midpoints
///   8: corners plus all four edge midpoints
inline std::vector<Coord> place_landmarks(const GridField& field, int count) {
    const double inset = 1.0;
    const double lo = inset;
    const double hi = field.side_length() - inset;
    const double mid = field.side_length() / 2.0;
    const Coord o = field.origin();
    auto at = [&](double x, double y) { return Coord{o.x + x, o.y + y}; };
    const std::vector<Coord> corners{at(lo, lo), at(hi, lo), at(lo, hi), at(hi, hi)};
    const Coord bottom = at(mid, lo), top = at(mid, hi), left = at(lo, mid), right = at(hi, mid);
    switch (count) {
    case 2: return {left, right};
    case 3: return {corners[0], corners[1], top};
    case 4: return corners;
    case 6: return {corners[0], corners[1], corners[2], corners[3], bottom, top};
    case 8: return {corners[0], corners[1], corners[2], corners[3], bottom, top, left, right};
    default: throw ConfigError("unsupported landmark count " + std::to_string(count) + " (use 2, 3, 4, 6 or 8)");
    }
}

/// Node-to-node range at a given transmit power, scaled from the range at
/// full power with the node channel's path loss exponent.
inline double node_range_at(const ScenarioConfig& cfg, double ptx_dbm) {
    return cfg.range_node_m * std::pow(10.0, (ptx_dbm - cfg.ptx_dbm_max) / (10.0 * cfg.node_model.n));
}

inline int unknown_node_count(const ScenarioConfig& cfg) {
    if (cfg.node_count > 0) return cfg.node_count;
    return static_cast<int>(std::lround(cfg.density_per_ha * cfg.field_ha));
}

inline double grid_spacing(const ScenarioConfig& cfg) {
    return cfg.grid_spacing_m > 0.0 ? cfg.grid_spacing_m : 100.0 / std::sqrt(cfg.density_per_ha);
}

/// Builds the nodes of one deployment. Landmarks take ids 0..n_a-1.
inline Scenario make_scenario(const ScenarioConfig& cfg, RandomStream& rng) {
    cfg.validate();
    Scenario s{GridField::from_hectares(cfg.field_ha, cfg.cell_size_m), cfg.node_model, cfg.landmark_model, {},
               node_range_at(cfg, cfg.ptx_dbm_unknown), cfg.range_landmark_m, cfg.seed, cfg.max_steps,
               cfg.hop_limit};
    const auto landmarks = place_landmarks(s.field, cfg.landmark_count);
    const auto unknowns = cfg.placement == Placement::Grid ? place_grid(s.field, grid_spacing(cfg))
                                                           : place_random(s.field, unknown_node_count(cfg), rng);
    if (unknowns.empty()) throw EmptyDeployment("deployment has no unknown nodes");
    int id = 0;
    for (const Coord& p : landmarks) {
        s.nodes.push_back({id++, NodeRole::Landmark, p, cfg.ptx_dbm_landmark,
                           delta_pmf(s.field, position_to_cell(s.field, p))});
    }
    for (const Coord& p : unknowns)
        s.nodes.push_back({id++, NodeRole::Unknown, p, cfg.ptx_dbm_unknown, uniform_pmf(s.field)});
    return s;
}

/// Edge (i, j) iff their distance is below the applicable range: the landmark
/// range when either end is a landmark, the node range otherwise.
inline ConnectivityGraph build_connectivity(const Scenario& s) {
    ConnectivityGraph g;
    const std::size_t n = s.nodes.size();
    g.adjacency.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool landmark_link = s.nodes[i].is_landmark() || s.nodes[j].is_landmark();
            const double range = landmark_link ? s.range_landmark_m : s.range_node_m;
            if (distance(s.nodes[i].true_position, s.nodes[j].true_position) < range) {
                g.adjacency[i].push_back(static_cast<int>(j));
                g.adjacency[j].push_back(static_cast<int>(i));
            }
        }
    return g;
}

inline DegreeStats degree_stats(const ConnectivityGraph& g, const std::vector<Node>& nodes) {
    DegreeStats out;
    int unknowns = 0;
    for (const Node& node : nodes) {
        if (node.is_landmark()) continue;
        ++unknowns;
        for (int nb : g.neighbors(node.id)) {
            if (nodes[static_cast<std::size_t>(nb)].is_landmark())
                out.avg_landmark_degree += 1.0;
            else
                out.avg_unknown_degree += 1.0;
        }
    }
    if (unknowns > 0) {
        out.avg_landmark_degree /= unknowns;
        out.avg_unknown_degree /= unknowns;
    }
    return out;
}

} // namespace gridloc

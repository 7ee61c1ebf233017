#pragma once

// Monte-Carlo experiment driver and its file outputs.
//
// One experiment directory holds:
//   metrics.csv      pooled statistics per sweep point and round
//   degrees.csv      per-trial degree statistics
//   trajectory.csv   per trial, round and unknown node: entropy, decided cell, error
//   heatmaps/*.txt   final-round pmfs of trial 0 for the designated nodes
//   manifest.json    configs, seeds and an FNV-1a 64 hash of every file above

#include "gridloc/bayes_engine.hpp"
#include "gridloc/config.hpp"
#include "gridloc/errors.hpp"
#include "gridloc/experiment.hpp"
#include "gridloc/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

namespace gridloc {

enum class SweepAxis { None, Ptx, Landmarks, Density };

inline const char* to_string(SweepAxis a) {
    switch (a) {
    case SweepAxis::Ptx: return "ptx";
    case SweepAxis::Landmarks: return "landmarks";
    case SweepAxis::Density: return "density";
    default: return "none";
    }
}

inline SweepAxis parse_axis(const std::string& s) {
    if (s == "ptx") return SweepAxis::Ptx;
    if (s == "landmarks") return SweepAxis::Landmarks;
    if (s == "density") return SweepAxis::Density;
    if (s == "none") return SweepAxis::None;
    throw ConfigError("sweep axis must be ptx, landmarks or density, got '" + s + "'");
}

/// Default sweep values for each axis.
inline std::vector<double> default_sweep_values(SweepAxis a) {
    switch (a) {
    case SweepAxis::Ptx: {
        std::vector<double> v;
        for (int p = 0; p <= 15; ++p) v.push_back(p);
        return v;
    }
    case SweepAxis::Landmarks: return {2, 3, 4, 6, 8};
    case SweepAxis::Density: return {3, 7};
    default: return {0};
    }
}

struct ExperimentPlan {
    ScenarioConfig config;
    SweepAxis axis = SweepAxis::None;
    std::vector<double> values; // empty: default_sweep_values(axis)
    int trials = 1;
    std::filesystem::path out_dir = "gridloc_out";
    unsigned threads = 0; // 0: hardware concurrency
};

inline std::string format_number(double v, const char* fmt = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

/// Applies one sweep value to a config and tags its name with it.
inline ScenarioConfig apply_sweep(ScenarioConfig cfg, SweepAxis axis, double value) {
    switch (axis) {
    case SweepAxis::Ptx:
        cfg.ptx_dbm_unknown = value;
        cfg.name += "_ptx" + format_number(value);
        break;
    case SweepAxis::Landmarks:
        cfg.landmark_count = static_cast<int>(std::lround(value));
        cfg.name += "_l" + format_number(value);
        break;
    case SweepAxis::Density:
        cfg.density_per_ha = value;
        cfg.grid_spacing_m = 0.0;
        cfg.node_count = 0;
        cfg.name += "_d" + format_number(value);
        break;
    default: break;
    }
    cfg.validate();
    return cfg;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// m lines of m space-separated values, row 1 first.
inline std::string format_heatmap(const LocationPmf& pmf, int m) {
    if (pmf.size() != static_cast<std::size_t>(m * m)) throw DomainError("pmf size does not match the grid");
    std::string out;
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            if (c) out += ' ';
            out += format_number(pmf[static_cast<std::size_t>(r * m + c)]);
        }
        out += '\n';
    }
    return out;
}

inline std::string dump_heatmap(const SimState& state, int node_id) {
    if (node_id < 0 || static_cast<std::size_t>(node_id) >= state.node_count())
        throw UnknownNode("no node with id " + std::to_string(node_id));
    return format_heatmap(state.pmf(node_id), state.field().cells_per_edge());
}

/// Heatmap of one node after a given round of one trial.
inline std::string heatmap_at(const ScenarioConfig& cfg, int trial, int node_id, int round) {
    if (round < 0 || round > cfg.max_steps)
        throw DomainError("round " + std::to_string(round) + " outside 0.." + std::to_string(cfg.max_steps));
    std::string out;
    auto capture = [&](const RoundSnapshot& snap, const SimState& state) {
        if (snap.round == round) out = dump_heatmap(state, node_id);
    };
    SimState state = make_trial_state(cfg, trial);
    if (node_id < 0 || static_cast<std::size_t>(node_id) >= state.node_count())
        throw UnknownNode("no node with id " + std::to_string(node_id));
    run(state, cfg.max_steps, capture);
    return out;
}

struct PointResult {
    ScenarioConfig config;
    double sweep_value = 0.0;
    std::vector<TrialOutput> trials;
    std::vector<RoundMetrics> rounds;
    DegreeStats degrees;
    std::map<int, std::string> heatmaps; // node id -> final-round heatmap of trial 0
};

/// Runs trials 0..n-1 of a config; trial t always uses the stream of (seed, t),
/// so the result does not depend on the thread count.
inline PointResult run_point(const ScenarioConfig& cfg, int trials, unsigned threads = 0) {
    if (trials < 1) throw ConfigError("trials must be at least 1");
    PointResult pr;
    pr.config = cfg;
    pr.trials.resize(static_cast<std::size_t>(trials));

    auto capture = [&](const RoundSnapshot& snap, const SimState& state) {
        if (snap.round != cfg.max_steps) return;
        for (int id : cfg.heatmap_nodes) pr.heatmaps[id] = dump_heatmap(state, id);
    };
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int t = next++; t < trials; t = next++)
            pr.trials[static_cast<std::size_t>(t)] = run_trial(cfg, t, t == 0 ? RoundObserver(capture) : RoundObserver{});
    };
    if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(trials));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }

    std::vector<TrialResult> results;
    for (const auto& t : pr.trials) results.push_back(t.result);
    pr.rounds = pool_rounds(results);
    pr.degrees = mean_degrees(results);
    return pr;
}

struct ExperimentResult {
    std::vector<PointResult> points;
    std::vector<std::filesystem::path> files; // relative to the output directory
};

namespace detail {

inline void write_file(const std::filesystem::path& root, const std::filesystem::path& rel, const std::string& body,
                       std::vector<std::filesystem::path>& files) {
    const auto path = root / rel;
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << body;
    out.close();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
    files.push_back(rel);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace detail

/// Runs every sweep point and writes the experiment directory. Files are
/// written by the calling thread only, after all trials of a point finish.
inline ExperimentResult run_experiment(const ExperimentPlan& plan) {
    if (plan.trials < 1) throw ConfigError("trials must be at least 1");
    const auto values = plan.values.empty() ? default_sweep_values(plan.axis) : plan.values;

    std::error_code ec;
    std::filesystem::create_directories(plan.out_dir, ec);
    if (ec || !std::filesystem::is_directory(plan.out_dir))
        throw IoError("cannot create output directory '" + plan.out_dir.string() + "'");

    ExperimentResult res;
    std::string metrics =
        "scenario,sweep_axis,sweep_value,round,two_drms_m,mean_error_m,coverage_at_2drms,samples,"
        "avg_landmark_degree,avg_unknown_degree\n";
    std::string degrees = "scenario,sweep_value,trial,avg_landmark_degree,avg_unknown_degree,annihilated_updates\n";
    std::string trajectory = "scenario,sweep_value,trial,round,node,entropy_nats,decided_cell,error_m\n";
    nlohmann::json points = nlohmann::json::array();

    for (double v : values) {
        PointResult pr = run_point(apply_sweep(plan.config, plan.axis, v), plan.trials, plan.threads);
        pr.sweep_value = v;
        const std::string& id = pr.config.name;
        const std::string sv = format_number(v);
        for (const RoundMetrics& rm : pr.rounds) {
            metrics += id + "," + to_string(plan.axis) + "," + sv + "," + std::to_string(rm.round) + "," +
                       format_number(rm.two_drms, "%.4f") + "," + format_number(rm.mean_error, "%.4f") + "," +
                       format_number(rm.coverage_at_2drms, "%.4f") + "," + std::to_string(rm.samples) + "," +
                       format_number(pr.degrees.avg_landmark_degree, "%.6f") + "," +
                       format_number(pr.degrees.avg_unknown_degree, "%.6f") + "\n";
        }
        nlohmann::json seeds = nlohmann::json::array();
        for (const TrialOutput& t : pr.trials) {
            const auto& d = t.result.degrees;
            degrees += id + "," + sv + "," + std::to_string(t.result.trial) + "," +
                       format_number(d.avg_landmark_degree, "%.17g") + "," +
                       format_number(d.avg_unknown_degree, "%.17g") + "," +
                       std::to_string(t.result.annihilated_updates) + "\n";
            for (const NodeRecord& r : t.records) {
                trajectory += id + "," + sv + "," + std::to_string(t.result.trial) + "," + std::to_string(r.round) +
                              "," + std::to_string(r.node) + "," + format_number(r.entropy) + "," +
                              std::to_string(r.decided.value) + "," + format_number(r.error_m, "%.4f") + "\n";
            }
        }
        for (int t = 0; t < plan.trials; ++t)
            seeds.push_back({{"trial", t}, {"stream_seed", RandomStream::trial_seed(pr.config.seed, static_cast<std::uint64_t>(t))}});
        for (const auto& [node, text] : pr.heatmaps)
            detail::write_file(plan.out_dir,
                               std::filesystem::path("heatmaps") /
                                   (id + "_node" + std::to_string(node) + "_round" +
                                    std::to_string(pr.config.max_steps) + ".txt"),
                               text, res.files);
        points.push_back({{"scenario", id}, {"sweep_value", v}, {"config", to_json(pr.config)}, {"trials", seeds}});
        res.points.push_back(std::move(pr));
    }
    detail::write_file(plan.out_dir, "metrics.csv", metrics, res.files);
    detail::write_file(plan.out_dir, "degrees.csv", degrees, res.files);
    detail::write_file(plan.out_dir, "trajectory.csv", trajectory, res.files);

    nlohmann::json files = nlohmann::json::array();
    for (const auto& rel : res.files) {
        const auto body = detail::read_file(plan.out_dir / rel);
        char hash[17];
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
        files.push_back({{"path", rel.generic_string()}, {"bytes", body.size()}, {"fnv1a64", hash}});
    }
    nlohmann::json manifest = {{"sweep_axis", to_string(plan.axis)},
                               {"trials", plan.trials},
                               {"master_seed", plan.config.seed},
                               {"trial_stream", "splitmix64(master_seed, trial)"},
                               {"points", points},
                               {"files", files}};
    std::vector<std::filesystem::path> unused;
    detail::write_file(plan.out_dir, "manifest.json", manifest.dump(2) + "\n", unused);
    res.files.emplace_back("manifest.json");
    return res;
}

} // namespace gridloc

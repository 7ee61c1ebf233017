#pragma once

#include "gridloc/bayes_engine.hpp"
#include "gridloc/deployment.hpp"
#include "gridloc/metrics.hpp"
#include "gridloc/random.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gridloc {

/// Per (round, unknown node) record of one trial.
struct NodeRecord {
    int round = 0;
    int node = 0;
    double entropy = 0.0;
    CellIndex decided;
    double error_m = 0.0;
};

struct TrialOutput {
    TrialResult result;
    std::vector<NodeRecord> records;
};

inline SimState make_trial_state(const ScenarioConfig& cfg, int trial) {
    RandomStream rng = RandomStream::for_trial(cfg.seed, static_cast<std::uint64_t>(trial));
    Scenario scenario = make_scenario(cfg, rng);
    EngineOptions options;
    if (cfg.codec_enabled) options.codec_payload = cfg.payload_limit;
    return SimState(std::move(scenario), rng.next_u64(), options);
}

/// Builds the trial's deployment, runs advertisement plus max_steps route
/// discoveries and scores every unknown node after every round.
inline TrialOutput run_trial(const ScenarioConfig& cfg, int trial, const RoundObserver& observer = {}) {
    SimState state = make_trial_state(cfg, trial);
    const Trajectory traj = run(state, cfg.max_steps, observer);

    TrialOutput out;
    out.result.trial = trial;
    out.result.degrees = degree_stats(state.graph(), state.scenario().nodes);
    out.result.annihilated_updates = state.annihilated_updates();
    const auto unknowns = state.unknown_ids();
    for (const RoundSnapshot& snap : traj.rounds) {
        std::vector<double> errors;
        errors.reserve(unknowns.size());
        for (int id : unknowns) {
            const auto decided = snap.decisions[static_cast<std::size_t>(id)];
            const double err = localization_error(state.field(), decided, state.node(id).true_position);
            errors.push_back(err);
            out.records.push_back({snap.round, id, snap.entropies[static_cast<std::size_t>(id)], decided, err});
        }
        out.result.round_errors.push_back(std::move(errors));
    }
    out.result.rounds_to_convergence = rounds_to_convergence(out.result.round_errors, 1.0);
    return out;
}

} // namespace gridloc

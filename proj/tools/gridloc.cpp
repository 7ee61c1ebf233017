// gridloc: batch driver for the grid localization simulator.
//
//   gridloc run     --config FILE | --preset NAME [--trials N] [--seed S] [--out DIR]
//   gridloc sweep   --axis ptx|landmarks|density [--values v,...] (plus the run options)
//   gridloc heatmap --node ID --round K [--trial T] [--config FILE | --preset NAME] [--seed S] [--out FILE]
//   gridloc presets
//
// GRIDLOC_OUT_DIR sets the output directory when --out is not given.

#include "gridloc/config.hpp"
#include "gridloc/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct ScenarioArgs {
    std::string config_path;
    std::string preset_name;
    std::optional<std::uint64_t> seed;
};

void add_scenario_options(CLI::App* cmd, ScenarioArgs& a) {
    auto* cfg = cmd->add_option("--config", a.config_path, "scenario config file (JSON)");
    auto* pre = cmd->add_option("--preset", a.preset_name, "built-in preset, see `gridloc presets`");
    cfg->excludes(pre);
    cmd->add_option("--seed", a.seed, "master seed (overrides the config)");
}

gridloc::ScenarioConfig load_scenario(const ScenarioArgs& a) {
    gridloc::ScenarioConfig cfg;
    if (!a.config_path.empty()) cfg = gridloc::load_config(a.config_path);
    else if (!a.preset_name.empty()) cfg = gridloc::preset(a.preset_name);
    if (a.seed) cfg.seed = *a.seed;
    return cfg;
}

std::string output_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("GRIDLOC_OUT_DIR"); env && *env) return env;
    return "gridloc_out";
}

void print_summary(const gridloc::ExperimentResult& res, const std::string& dir) {
    for (const auto& p : res.points) {
        if (p.rounds.empty()) continue;
        const auto& last = p.rounds.back();
        std::cout << p.config.name << ": round " << last.round << " 2DRMS " << gridloc::format_number(last.two_drms, "%.2f")
                  << " m, landmark degree " << gridloc::format_number(p.degrees.avg_landmark_degree, "%.2f")
                  << ", unknown degree " << gridloc::format_number(p.degrees.avg_unknown_degree, "%.2f") << "\n";
    }
    std::cout << "wrote " << res.files.size() << " files to " << dir << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grid-based Bayesian localization simulator"};
    app.require_subcommand(1);

    ScenarioArgs run_args, sweep_args, heat_args;
    std::optional<int> run_trials, sweep_trials;
    std::string run_out, sweep_out, heat_out, axis;
    std::vector<double> values;
    unsigned threads = 0;
    int node = -1, round = 0, trial = 0;

    auto* run = app.add_subcommand("run", "run Monte-Carlo trials of one scenario");
    add_scenario_options(run, run_args);
    run->add_option("--trials", run_trials, "number of trials (overrides the config)")->check(CLI::PositiveNumber);
    run->add_option("--out", run_out, "output directory");
    run->add_option("--threads", threads, "worker threads, 0 for all cores");

    auto* sweep = app.add_subcommand("sweep", "run a scenario across one parameter axis");
    add_scenario_options(sweep, sweep_args);
    sweep->add_option("--axis", axis, "ptx, landmarks or density")->required();
    sweep->add_option("--values", values, "sweep values (default: full range of the axis)")->delimiter(',');
    sweep->add_option("--trials", sweep_trials, "trials per sweep point")->check(CLI::PositiveNumber);
    sweep->add_option("--out", sweep_out, "output directory");
    sweep->add_option("--threads", threads, "worker threads, 0 for all cores");

    auto* heat = app.add_subcommand("heatmap", "print one node's pmf after a given round");
    add_scenario_options(heat, heat_args);
    heat->add_option("--node", node, "node id (landmarks are 0..n-1)")->required();
    heat->add_option("--round", round, "round, 0 is right after advertisement")->required();
    heat->add_option("--trial", trial, "trial index");
    heat->add_option("--out", heat_out, "write to this file instead of stdout");

    auto* presets = app.add_subcommand("presets", "list built-in scenario presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*presets) {
            for (const auto& n : gridloc::preset_names()) std::cout << n << "\n";
            return 0;
        }
        if (*run || *sweep) {
            const bool is_run = static_cast<bool>(*run);
            gridloc::ExperimentPlan plan;
            plan.config = load_scenario(is_run ? run_args : sweep_args);
            const auto& trials = is_run ? run_trials : sweep_trials;
            plan.trials = trials ? *trials : plan.config.trials;
            plan.out_dir = output_dir(is_run ? run_out : sweep_out);
            plan.threads = threads;
            if (!is_run) {
                plan.axis = gridloc::parse_axis(axis);
                plan.values = values;
            }
            const auto res = gridloc::run_experiment(plan);
            print_summary(res, plan.out_dir.string());
            return 0;
        }
        if (*heat) {
            const auto cfg = load_scenario(heat_args);
            const auto text = gridloc::heatmap_at(cfg, trial, node, round);
            if (heat_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream out(heat_out, std::ios::binary);
                if (!(out << text)) throw gridloc::IoError("cannot write '" + heat_out + "'");
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "gridloc: error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

#pragma once

#include "gridloc/deployment.hpp"
#include "gridloc/errors.hpp"
#include "gridloc/field_grid.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace gridloc {

inline double localization_error(const GridField& field, CellIndex decided, Coord true_position) {
    return distance(cell_centroid(field, decided), true_position);
}

/// Twice the root-mean-square radial error.
inline double two_drms(std::span<const double> errors) {
    if (errors.empty()) throw DomainError("2DRMS of an empty error set");
    double sq = 0.0;
    for (double e : errors) sq += e * e;
    return 2.0 * std::sqrt(sq / static_cast<double>(errors.size()));
}

/// Fraction of errors no larger than r.
inline double coverage_check(std::span<const double> errors, double r) {
    if (!(r >= 0.0)) throw DomainError("coverage radius must be non-negative");
    if (errors.empty()) return 0.0;
    const auto inside = std::count_if(errors.begin(), errors.end(), [r](double e) { return e <= r; });
    return static_cast<double>(inside) / static_cast<double>(errors.size());
}

inline double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

/// Per-trial outcome: unknown-node errors for every round.
struct TrialResult {
    int trial = 0;
    std::vector<std::vector<double>> round_errors; // [round][unknown node]
    int rounds_to_convergence = 0;
    DegreeStats degrees;
    std::size_t annihilated_updates = 0;
};

/// First round after which the decisions' 2DRMS stays within `tolerance_m` of
/// the final value.
inline int rounds_to_convergence(const std::vector<std::vector<double>>& round_errors, double tolerance_m) {
    if (round_errors.empty()) return 0;
    const double final_value = two_drms(round_errors.back());
    int r = static_cast<int>(round_errors.size()) - 1;
    while (r > 0 && std::abs(two_drms(round_errors[static_cast<std::size_t>(r - 1)]) - final_value) <= tolerance_m) --r;
    return r;
}

/// Pooled statistics for one round across trials.
struct RoundMetrics {
    int round = 0;
    double two_drms = 0.0;
    double mean_error = 0.0;
    double coverage_at_2drms = 0.0;
    std::size_t samples = 0;
};

/// Pools every unknown node of every trial into one error set per round.
inline std::vector<RoundMetrics> pool_rounds(std::span<const TrialResult> trials) {
    std::vector<RoundMetrics> out;
    if (trials.empty()) return out;
    std::size_t rounds = trials.front().round_errors.size();
    for (const auto& t : trials) rounds = std::min(rounds, t.round_errors.size());
    for (std::size_t r = 0; r < rounds; ++r) {
        std::vector<double> pooled;
        for (const auto& t : trials) pooled.insert(pooled.end(), t.round_errors[r].begin(), t.round_errors[r].end());
        RoundMetrics rm;
        rm.round = static_cast<int>(r);
        rm.samples = pooled.size();
        if (!pooled.empty()) {
            rm.two_drms = two_drms(pooled);
            rm.mean_error = mean(pooled);
            rm.coverage_at_2drms = coverage_check(pooled, rm.two_drms);
        }
        out.push_back(rm);
    }
    return out;
}

inline DegreeStats mean_degrees(std::span<const TrialResult> trials) {
    DegreeStats d;
    if (trials.empty()) return d;
    for (const auto& t : trials) {
        d.avg_landmark_degree += t.degrees.avg_landmark_degree;
        d.avg_unknown_degree += t.degrees.avg_unknown_degree;
    }
    d.avg_landmark_degree /= static_cast<double>(trials.size());
    d.avg_unknown_degree /= static_cast<double>(trials.size());
    return d;
}

} // namespace gridloc

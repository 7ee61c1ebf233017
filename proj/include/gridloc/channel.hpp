#pragma once

#include "gridloc/errors.hpp"
#include "gridloc/field_grid.hpp"
#include "gridloc/random.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

namespace gridloc {

enum class CanopyMode { BelowCanopy, AboveCanopy };

inline const char* to_string(CanopyMode mode) {
    return mode == CanopyMode::BelowCanopy ? "below_canopy" : "above_canopy";
}

/// Log-distance path loss with log-normal shadowing:
/// PL(d) = pl0 + 10 n log10(d / d0) + N(0, sigma).
struct PathLossModel {
    double pl0_db = 75.0;
    double n = 3.61;
    double sigma_db = 5.27;
    double d0_m = 1.0;

    void validate() const {
        if (!(n > 0.0) || !(sigma_db > 0.0) || !(d0_m > 0.0))
            throw DomainError("path loss model needs n > 0, sigma > 0 and d0 > 0");
    }

    /// Orchard fits for a 2.45 GHz transmitter below/above the canopy.
    static PathLossModel preset(CanopyMode mode, double d0_m = 1.0) {
        if (mode == CanopyMode::BelowCanopy) return {75.0, 3.61, 5.27, d0_m};
        return {72.0, 2.91, 4.14, d0_m};
    }

    friend bool operator==(const PathLossModel&, const PathLossModel&) = default;
};

inline double mean_path_loss(const PathLossModel& model, double d_m) {
    if (!(d_m > 0.0)) throw DomainError("path loss distance must be positive");
    return model.pl0_db + 10.0 * model.n * std::log10(d_m / model.d0_m);
}

inline double sample_path_loss(const PathLossModel& model, double d_m, RandomStream& rng) {
    const double mean = mean_path_loss(model, d_m);
    return rng.normal(mean, model.sigma_db);
}

/// Discretization of the path-loss likelihood: Gaussian amplitudes collected
/// on the absolute step_db grid over mean +/- span_sigmas * sigma, then scaled
/// to unit sum.
struct LikelihoodBinning {
    double step_db = 1.0;
    double span_sigmas = 3.0;

    friend bool operator==(const LikelihoodBinning&, const LikelihoodBinning&) = default;
};

/// Bin masses for one mean path loss. Bin b is centred on (first_bin + b) * step.
struct LikelihoodRow {
    double distance_m = 0.0;
    double mean_db = 0.0;
    long first_bin = 0;
    std::vector<double> probs;

    /// Mass of the bin nearest to pl; zero outside the truncated support.
    double at(double pl_db, double step_db) const {
        const long bin = static_cast<long>(std::floor(pl_db / step_db + 0.5));
        const long offset = bin - first_bin;
        if (offset < 0 || offset >= static_cast<long>(probs.size())) return 0.0;
        return probs[static_cast<std::size_t>(offset)];
    }
};

namespace detail {

inline LikelihoodRow make_row(const PathLossModel& model, double d_m, const LikelihoodBinning& bins) {
    LikelihoodRow row;
    row.distance_m = d_m;
    row.mean_db = mean_path_loss(model, d_m);
    const double half = bins.span_sigmas * model.sigma_db;
    const long lo = static_cast<long>(std::ceil((row.mean_db - half) / bins.step_db));
    const long hi = static_cast<long>(std::floor((row.mean_db + half) / bins.step_db));
    row.first_bin = lo;
    double total = 0.0;
    for (long b = lo; b <= hi; ++b) {
        const double z = (b * bins.step_db - row.mean_db) / model.sigma_db;
        row.probs.push_back(std::exp(-0.5 * z * z));
        total += row.probs.back();
    }
    for (double& p : row.probs) p /= total;
    return row;
}

} // namespace detail

/// P(pl | d) under the truncated, binned Gaussian.
inline double likelihood(const PathLossModel& model, double pl_db, double d_m,
                         const LikelihoodBinning& bins = {}) {
    return detail::make_row(model, d_m, bins).at(pl_db, bins.step_db);
}

/// Likelihood for every cell pair of a grid. Rows are keyed by the unordered
/// offset class {|drow|, |dcol|}; the zero offset uses half a cell as distance.
class LikelihoodTable {
public:
    LikelihoodTable(const GridField& field, const PathLossModel& model, LikelihoodBinning bins = {})
        : field_(field), model_(model), bins_(bins) {
        model.validate();
        if (!(bins.step_db > 0.0) || !(bins.span_sigmas > 0.0))
            throw DomainError("likelihood binning needs positive step and span");
        const int m = field.cells_per_edge();
        rows_.resize(static_cast<std::size_t>(m * m));
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) {
                const double d = (a == 0 && b == 0) ? field.cell_size() / 2.0
                                                    : field.cell_size() * std::hypot(a, b);
                rows_[static_cast<std::size_t>(a * m + b)] = detail::make_row(model, d, bins);
            }
    }

    const GridField& field() const { return field_; }
    const PathLossModel& model() const { return model_; }
    const LikelihoodBinning& binning() const { return bins_; }

    const LikelihoodRow& row(int drow, int dcol) const {
        int a = std::abs(drow), b = std::abs(dcol);
        if (a > b) std::swap(a, b);
        return rows_[static_cast<std::size_t>(a * field_.cells_per_edge() + b)];
    }

    const LikelihoodRow& row(CellIndex a, CellIndex b) const {
        return row(field_.row_of(a) - field_.row_of(b), field_.col_of(a) - field_.col_of(b));
    }

    double lookup(CellIndex a, CellIndex b, double pl_db) const {
        if (!field_.valid(a) || !field_.valid(b)) throw InvalidCell("likelihood lookup outside grid");
        return row(a, b).at(pl_db, bins_.step_db);
    }

    /// Likelihood of pl for every offset (drow, dcol) with 0 <= drow, dcol < m,
    /// laid out as drow * m + dcol.
    std::vector<double> offset_kernel(double pl_db) const {
        const int m = field_.cells_per_edge();
        std::vector<double> kernel(static_cast<std::size_t>(m * m));
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                kernel[static_cast<std::size_t>(a * m + b)] = row(a, b).at(pl_db, bins_.step_db);
        return kernel;
    }

    /// Number of distinct non-zero inter-centroid distances on the grid.
    int distinct_distance_count() const {
        std::vector<double> ds;
        const int m = field_.cells_per_edge();
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b)
                if (a != 0 || b != 0) ds.push_back(std::hypot(a, b));
        std::sort(ds.begin(), ds.end());
        int count = 0;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (i == 0 || ds[i] - ds[i - 1] > 1e-9) ++count;
        return count;
    }

private:
    GridField field_;
    PathLossModel model_;
    LikelihoodBinning bins_;
    std::vector<LikelihoodRow> rows_;
};

inline LikelihoodTable build_likelihood(const GridField& field, const PathLossModel& model,
                                        LikelihoodBinning bins = {}) {
    return LikelihoodTable(field, model, bins);
}

/// Largest distance at which P(ptx - PL(d) >= sensitivity) >= link_prob.
/// Distances below d0 are outside the model and reported as no coverage.
inline double connectivity_distance(const PathLossModel& model, double ptx_dbm, double sensitivity_dbm,
                                    double link_prob) {
    model.validate();
    if (!(link_prob > 0.0 && link_prob < 1.0)) throw DomainError("link probability must lie in (0, 1)");
    const double z = boost::math::quantile(boost::math::normal_distribution<double>(), link_prob);
    const double margin = ptx_dbm - sensitivity_dbm - model.pl0_db - z * model.sigma_db;
    if (margin < 0.0)
        throw NoCoverage("link budget of " + std::to_string(ptx_dbm - sensitivity_dbm) +
                         " dB cannot reach the reference distance");
    return model.d0_m * std::pow(10.0, margin / (10.0 * model.n));
}

} // namespace gridloc

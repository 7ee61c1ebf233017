#pragma once

#include "gridloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace gridloc {

struct Coord {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Coord&, const Coord&) = default;
};

inline double distance(Coord a, Coord b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// 1-based, row-major cell index into an m x m grid.
struct CellIndex {
    int value = 1;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
    friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

/// Square field split into m x m equal square cells. Cells may overhang the
/// nominal edge when the side is not a multiple of the cell size.
class GridField {
public:
    GridField(double side_length_m, double cell_size_m, Coord origin = {})
        : side_(side_length_m), cell_(cell_size_m), origin_(origin) {
        if (!(side_length_m > 0.0) || !(cell_size_m > 0.0))
            throw DomainError("grid field needs positive side and cell size");
        // tolerate round-off when side is an exact multiple of the cell size
        m_ = std::max(1, static_cast<int>(std::ceil(side_length_m / cell_size_m - 1e-9)));
    }

    static GridField from_hectares(double hectares, double cell_size_m) {
        if (!(hectares > 0.0)) throw DomainError("field area must be positive");
        return GridField(std::sqrt(hectares * 10000.0), cell_size_m);
    }

    double side_length() const { return side_; }
    double cell_size() const { return cell_; }
    int cells_per_edge() const { return m_; }
    int cell_count() const { return m_ * m_; }
    Coord origin() const { return origin_; }
    /// Edge of the gridded area, m * cell_size.
    double extent() const { return m_ * cell_; }

    bool valid(CellIndex c) const { return c.value >= 1 && c.value <= cell_count(); }

    int row_of(CellIndex c) const { return (c.value - 1) / m_ + 1; }
    int col_of(CellIndex c) const { return (c.value - 1) % m_ + 1; }
    CellIndex cell_at(int row, int col) const { return CellIndex{(row - 1) * m_ + col}; }

    friend bool operator==(const GridField& a, const GridField& b) {
        return a.m_ == b.m_ && a.cell_ == b.cell_ && a.side_ == b.side_ && a.origin_ == b.origin_;
    }

private:
    double side_;
    double cell_;
    Coord origin_;
    int m_ = 1;
};

inline Coord cell_centroid(const GridField& field, CellIndex c) {
    if (!field.valid(c))
        throw InvalidCell("cell index " + std::to_string(c.value) + " outside 1.." +
                          std::to_string(field.cell_count()));
    const double s = field.cell_size();
    return {field.origin().x + (field.col_of(c) - 0.5) * s,
            field.origin().y + (field.row_of(c) - 0.5) * s};
}

inline CellIndex position_to_cell(const GridField& field, Coord p) {
    const double x = p.x - field.origin().x;
    const double y = p.y - field.origin().y;
    const double extent = field.extent();
    if (!(x >= 0.0 && x < extent && y >= 0.0 && y < extent))
        throw OutOfBounds("position (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                          ") outside the gridded field");
    const int m = field.cells_per_edge();
    const int col = std::min(m, static_cast<int>(x / field.cell_size()) + 1);
    const int row = std::min(m, static_cast<int>(y / field.cell_size()) + 1);
    return field.cell_at(row, col);
}

/// Probability mass over the cells of a grid; entry i belongs to cell i + 1.
class LocationPmf {
public:
    LocationPmf() = default;
    explicit LocationPmf(std::vector<double> values) : values_(std::move(values)) {}

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double at(CellIndex c) const { return values_.at(static_cast<std::size_t>(c.value - 1)); }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    double sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

    /// Rescales to unit mass. Returns false (and leaves the pmf untouched) when
    /// there is no mass to rescale.
    bool normalize() {
        const double total = sum();
        if (!(total > 0.0) || !std::isfinite(total)) return false;
        for (double& v : values_) v /= total;
        return true;
    }

    /// Shannon entropy in nats.
    double entropy() const {
        double h = 0.0;
        for (double v : values_)
            if (v > 0.0) h -= v * std::log(v);
        return h;
    }

    friend bool operator==(const LocationPmf&, const LocationPmf&) = default;

private:
    std::vector<double> values_;
};

inline LocationPmf uniform_pmf(const GridField& field) {
    const auto n = static_cast<std::size_t>(field.cell_count());
    return LocationPmf(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

inline LocationPmf delta_pmf(const GridField& field, CellIndex c) {
    if (!field.valid(c)) throw InvalidCell("delta at invalid cell " + std::to_string(c.value));
    std::vector<double> v(static_cast<std::size_t>(field.cell_count()), 0.0);
    v[static_cast<std::size_t>(c.value - 1)] = 1.0;
    return LocationPmf(std::move(v));
}

} // namespace gridloc

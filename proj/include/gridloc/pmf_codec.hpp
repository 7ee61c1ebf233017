#pragma once

// Transform coding of location pmfs for single-packet transport.
//
// Wire layout (bit-exact):
//   byte 0      m, cells per grid edge
//   byte 1      K, number of coded coefficients
//   bytes 2..3  scale, unsigned 16-bit big-endian, Q1.15 (scale = raw / 32768)
//   then a bit stream, most significant bit first:
//     K coefficient indices, ceil(log2(m*m)) bits each, ascending
//     K quantized values, 6-bit two's complement in [-31, 31]
//   zero padded to a byte boundary.
// Coefficient index i addresses the 2-D DCT-II coefficient (i / m, i % m).
// A value q dequantizes to q * scale / 31.

#include "gridloc/errors.hpp"
#include "gridloc/field_grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace gridloc {

inline constexpr int kDefaultPayloadLimit = 102;
inline constexpr int kHeaderBytes = 4;
inline constexpr int kValueBits = 6;
inline constexpr int kMaxLevel = 31;

struct EncodedPmf {
    int m = 1;
    std::uint16_t scale_raw = 0;
    std::vector<std::uint16_t> indices;
    std::vector<std::int8_t> values;

    int kept_count() const { return static_cast<int>(indices.size()); }
    double scale() const { return scale_raw / 32768.0; }

    friend bool operator==(const EncodedPmf&, const EncodedPmf&) = default;
};

inline int index_bits(int m) {
    const auto cells = static_cast<unsigned>(m * m);
    return cells > 1 ? static_cast<int>(std::bit_width(cells - 1)) : 0;
}

inline std::size_t encoded_size(int m, int kept) {
    const auto bits = static_cast<std::size_t>(kept) * static_cast<std::size_t>(index_bits(m) + kValueBits);
    return kHeaderBytes + (bits + 7) / 8;
}

/// Largest coefficient count whose serialization fits payload_limit bytes.
inline int coefficient_capacity(int m, int payload_limit) {
    int k = std::min(255, m * m);
    while (k > 0 && encoded_size(m, k) > static_cast<std::size_t>(payload_limit)) --k;
    return k;
}

namespace detail {

/// Orthonormal DCT-II basis, basis[k * m + n] = a(k) cos(pi (2n + 1) k / 2m).
inline std::vector<double> dct_basis(int m) {
    std::vector<double> basis(static_cast<std::size_t>(m * m));
    for (int k = 0; k < m; ++k) {
        const double a = k == 0 ? std::sqrt(1.0 / m) : std::sqrt(2.0 / m);
        for (int n = 0; n < m; ++n)
            basis[static_cast<std::size_t>(k * m + n)] =
                a * std::cos(std::numbers::pi * (2 * n + 1) * k / (2.0 * m));
    }
    return basis;
}

// out = A * in * A^T when forward, A^T * in * A otherwise; all m x m row-major.
inline std::vector<double> separable(std::span<const double> in, int m, bool forward) {
    const auto basis = dct_basis(m);
    auto a = [&](int i, int j) {
        return forward ? basis[static_cast<std::size_t>(i * m + j)] : basis[static_cast<std::size_t>(j * m + i)];
    };
    std::vector<double> tmp(in.size(), 0.0), out(in.size(), 0.0);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            double s = 0.0;
            for (int n = 0; n < m; ++n) s += a(r, n) * in[static_cast<std::size_t>(n * m + c)];
            tmp[static_cast<std::size_t>(r * m + c)] = s;
        }
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            double s = 0.0;
            for (int n = 0; n < m; ++n) s += tmp[static_cast<std::size_t>(r * m + n)] * a(c, n);
            out[static_cast<std::size_t>(r * m + c)] = s;
        }
    return out;
}

inline int grid_edge(std::size_t cells) {
    const auto m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cells))));
    if (m < 1 || static_cast<std::size_t>(m * m) != cells)
        throw DomainError("pmf of " + std::to_string(cells) + " cells is not a square grid");
    return m;
}

class BitWriter {
public:
    void put(std::uint32_t value, int bits) {
        for (int b = bits - 1; b >= 0; --b) {
            if (used_ % 8 == 0) bytes_.push_back(0);
            if ((value >> b) & 1U) bytes_.back() |= static_cast<std::uint8_t>(0x80U >> (used_ % 8));
            ++used_;
        }
    }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t used_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
    std::uint32_t get(int bits) {
        std::uint32_t v = 0;
        for (int b = 0; b < bits; ++b) {
            const std::size_t byte = pos_ / 8;
            if (byte >= bytes_.size()) throw DecodeError("encoded pmf is truncated");
            v = (v << 1) | ((bytes_[byte] >> (7 - pos_ % 8)) & 1U);
            ++pos_;
        }
        return v;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::vector<double> dct2(std::span<const double> values, int m) { return detail::separable(values, m, true); }
inline std::vector<double> idct2(std::span<const double> coeffs, int m) { return detail::separable(coeffs, m, false); }

enum class Quantizer {
    Rounding, ///< each kept coefficient rounded to the nearest level
    MinL1,    ///< levels adjusted one step at a time while the decoded L1 error drops
};

namespace detail {

// Greedy search over the quantized levels, DC included, against the L1 distance
// between the clamped, renormalized reconstruction and the target.
inline void refine_levels(std::span<const double> target, int m, std::span<const std::uint16_t> indices,
                          std::vector<long>& levels, double step) {
    const auto basis = dct_basis(m);
    const auto cells = static_cast<std::size_t>(m * m);
    auto row = [&](std::uint16_t idx, std::vector<double>& out) {
        const int u = idx / m, v = idx % m;
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c)
                out[static_cast<std::size_t>(r * m + c)] =
                    basis[static_cast<std::size_t>(u * m + r)] * basis[static_cast<std::size_t>(v * m + c)];
    };
    auto l1 = [&](const std::vector<double>& pre) {
        double mass = 0.0;
        for (double x : pre) mass += std::max(x, 0.0);
        if (!(mass > 0.0)) return std::numeric_limits<double>::infinity();
        double e = 0.0;
        for (std::size_t i = 0; i < cells; ++i) e += std::abs(std::max(pre[i], 0.0) / mass - target[i]);
        return e;
    };

    std::vector<std::vector<double>> rows(indices.size(), std::vector<double>(cells));
    std::vector<double> pre(cells, 0.0);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        row(indices[k], rows[k]);
        for (std::size_t i = 0; i < cells; ++i) pre[i] += static_cast<double>(levels[k]) * step * rows[k][i];
    }
    double err = l1(pre);
    std::vector<double> trial(cells);
    for (int pass = 0; pass < 10; ++pass) {
        bool improved = false;
        for (std::size_t k = 0; k < indices.size(); ++k) {
            for (long d : {-1L, 1L}) {
                if (std::abs(levels[k] + d) > kMaxLevel) continue;
                for (std::size_t i = 0; i < cells; ++i) trial[i] = pre[i] + static_cast<double>(d) * step * rows[k][i];
                const double e = l1(trial);
                if (e < err - 1e-15) {
                    err = e;
                    levels[k] += d;
                    pre.swap(trial);
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) break;
    }
}

} // namespace detail

/// Codes a pmf keeping at most max_kept coefficients (DC always among them),
/// chosen by magnitude. The quantizer scale is the largest coefficient
/// magnitude of the whole transform, so it does not depend on max_kept.
/// Coefficients that quantize to zero are not transmitted.
inline EncodedPmf encode_with_count(const LocationPmf& pmf, int max_kept, Quantizer quantizer = Quantizer::MinL1) {
    const int m = detail::grid_edge(pmf.size());
    if (m > 255) throw CapacityError("grid edge above 255 cannot be coded");
    if (max_kept < 1) throw CapacityError("payload cannot hold the DC coefficient");
    const auto coeffs = dct2(pmf.values(), m);

    double peak = 0.0;
    for (double c : coeffs) peak = std::max(peak, std::abs(c));
    EncodedPmf enc;
    enc.m = m;
    enc.scale_raw = static_cast<std::uint16_t>(std::clamp(std::ceil(peak * 32768.0 - 1e-9), 1.0, 65535.0));
    const double scale = enc.scale();

    std::vector<std::uint16_t> order(coeffs.size() - 1);
    std::iota(order.begin(), order.end(), std::uint16_t{1});
    std::stable_sort(order.begin(), order.end(), [&](std::uint16_t a, std::uint16_t b) {
        return std::abs(coeffs[a]) > std::abs(coeffs[b]);
    });
    order.insert(order.begin(), std::uint16_t{0});
    order.resize(std::min(order.size(), static_cast<std::size_t>(max_kept)));
    std::sort(order.begin(), order.end());

    std::vector<long> levels;
    for (std::uint16_t idx : order)
        levels.push_back(std::clamp(std::lround(coeffs[idx] / scale * kMaxLevel), -long{kMaxLevel}, long{kMaxLevel}));
    if (quantizer == Quantizer::MinL1) detail::refine_levels(pmf.values(), m, order, levels, scale / kMaxLevel);

    for (std::size_t k = 0; k < order.size(); ++k) {
        if (levels[k] == 0 && order[k] != 0) continue;
        enc.indices.push_back(order[k]);
        enc.values.push_back(static_cast<std::int8_t>(levels[k]));
    }
    return enc;
}

inline EncodedPmf encode(const LocationPmf& pmf, int payload_limit = kDefaultPayloadLimit) {
    const int m = detail::grid_edge(pmf.size());
    const int capacity = coefficient_capacity(m, payload_limit);
    if (capacity < 1)
        throw CapacityError("payload limit of " + std::to_string(payload_limit) + " bytes cannot hold header and DC");
    return encode_with_count(pmf, capacity);
}

inline std::vector<std::uint8_t> serialize(const EncodedPmf& enc) {
    if (enc.m < 1 || enc.m > 255) throw CapacityError("grid edge out of the 1..255 range");
    if (enc.indices.size() != enc.values.size() || enc.indices.empty() || enc.indices.size() > 255)
        throw CapacityError("coefficient count out of the 1..255 range");
    std::vector<std::uint8_t> out{static_cast<std::uint8_t>(enc.m), static_cast<std::uint8_t>(enc.indices.size()),
                                  static_cast<std::uint8_t>(enc.scale_raw >> 8),
                                  static_cast<std::uint8_t>(enc.scale_raw & 0xFF)};
    detail::BitWriter bits;
    const int ib = index_bits(enc.m);
    for (std::uint16_t idx : enc.indices) bits.put(idx, ib);
    for (std::int8_t v : enc.values) bits.put(static_cast<std::uint32_t>(v) & 0x3FU, kValueBits);
    const auto body = bits.take();
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

inline EncodedPmf deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < static_cast<std::size_t>(kHeaderBytes)) throw DecodeError("encoded pmf shorter than its header");
    EncodedPmf enc;
    enc.m = bytes[0];
    const int kept = bytes[1];
    enc.scale_raw = static_cast<std::uint16_t>((bytes[2] << 8) | bytes[3]);
    if (enc.m == 0 || kept == 0) throw DecodeError("encoded pmf header has zero grid edge or count");
    if (bytes.size() != encoded_size(enc.m, kept)) throw DecodeError("encoded pmf length does not match its header");
    detail::BitReader bits(bytes.subspan(kHeaderBytes));
    const int ib = index_bits(enc.m);
    for (int i = 0; i < kept; ++i) enc.indices.push_back(static_cast<std::uint16_t>(bits.get(ib)));
    for (int i = 0; i < kept; ++i) {
        auto raw = static_cast<int>(bits.get(kValueBits));
        if (raw >= 32) raw -= 64;
        enc.values.push_back(static_cast<std::int8_t>(raw));
    }
    return enc;
}

/// Inverse transform of the dequantized coefficients, before clamping.
inline std::vector<double> reconstruct(const EncodedPmf& enc) {
    if (enc.m < 1) throw DecodeError("grid edge must be positive");
    if (enc.indices.size() != enc.values.size()) throw DecodeError("index and value counts differ");
    const auto cells = static_cast<std::size_t>(enc.m * enc.m);
    std::vector<double> coeffs(cells, 0.0);
    for (std::size_t i = 0; i < enc.indices.size(); ++i) {
        if (enc.indices[i] >= cells)
            throw DecodeError("coefficient index " + std::to_string(enc.indices[i]) + " outside the grid");
        if (std::abs(enc.values[i]) > kMaxLevel) throw DecodeError("quantized value outside [-31, 31]");
        coeffs[enc.indices[i]] = enc.values[i] * enc.scale() / kMaxLevel;
    }
    return idct2(coeffs, enc.m);
}

inline LocationPmf decode(const EncodedPmf& enc) {
    auto values = reconstruct(enc);
    for (double& v : values) v = std::max(v, 0.0);
    LocationPmf pmf(std::move(values));
    if (!pmf.normalize()) {
        const double u = 1.0 / static_cast<double>(pmf.size());
        for (double& v : pmf.values()) v = u;
    }
    return pmf;
}

inline LocationPmf decode(std::span<const std::uint8_t> bytes) { return decode(deserialize(bytes)); }

} // namespace gridloc

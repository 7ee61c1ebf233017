#pragma once

#include "gridloc/channel.hpp"
#include "gridloc/deployment.hpp"
#include "gridloc/errors.hpp"
#include "gridloc/field_grid.hpp"
#include "gridloc/pmf_codec.hpp"
#include "gridloc/random.hpp"

#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace gridloc {

/// Anything that answers P(pl | receiver in cell a, sender in cell b).
template <class L>
concept PairLikelihood = requires(const L& lik, CellIndex a, CellIndex b, double pl) {
    { lik.lookup(a, b, pl) } -> std::convertible_to<double>;
    { lik.field() } -> std::convertible_to<const GridField&>;
};

/// One received path loss sample together with the sender's current pmf.
struct Evidence {
    std::span<const double> sender_pmf;
    double pl_db = 0.0;
};

/// f(x_j) = sum over x_i of P(pl | x_j, x_i) * P_i(x_i), for any likelihood.
template <PairLikelihood L>
std::vector<double> evidence_factor(const L& lik, const Evidence& ev) {
    const int cells = lik.field().cell_count();
    std::vector<double> f(static_cast<std::size_t>(cells), 0.0);
    for (int i = 1; i <= cells; ++i) {
        const double p = ev.sender_pmf[static_cast<std::size_t>(i - 1)];
        if (p == 0.0) continue;
        for (int j = 1; j <= cells; ++j)
            f[static_cast<std::size_t>(j - 1)] += lik.lookup(CellIndex{j}, CellIndex{i}, ev.pl_db) * p;
    }
    return f;
}

/// Same sum for a distance-only table, as a correlation of the sender pmf
/// with the offset kernel.
inline std::vector<double> evidence_factor(const LikelihoodTable& table, const Evidence& ev) {
    const int m = table.field().cells_per_edge();
    const int w = 2 * m - 1;
    const auto offsets = table.offset_kernel(ev.pl_db);
    // full[(dr + m - 1) * w + (dc + m - 1)] = P(pl | offset (dr, dc))
    std::vector<double> full(static_cast<std::size_t>(w * w));
    for (int dr = -(m - 1); dr < m; ++dr)
        for (int dc = -(m - 1); dc < m; ++dc)
            full[static_cast<std::size_t>((dr + m - 1) * w + dc + m - 1)] =
                offsets[static_cast<std::size_t>(std::abs(dr) * m + std::abs(dc))];

    std::vector<double> f(static_cast<std::size_t>(m * m), 0.0);
    for (int ri = 0; ri < m; ++ri)
        for (int ci = 0; ci < m; ++ci) {
            const double p = ev.sender_pmf[static_cast<std::size_t>(ri * m + ci)];
            if (p == 0.0) continue;
            for (int rj = 0; rj < m; ++rj) {
                const double* k = &full[static_cast<std::size_t>((rj - ri + m - 1) * w + (m - 1 - ci))];
                double* out = &f[static_cast<std::size_t>(rj * m)];
                for (int cj = 0; cj < m; ++cj) out[cj] += p * k[cj];
            }
        }
    return f;
}

/// Recursive Bayesian update of a receiver's location pmf:
///   posterior(x_j) ~ prior(x_j) * prod_i sum_{x_i} P(pl_i | x_j, x_i) P_i(x_i)
/// An empty message list returns the prior. Throws DegenerateEvidence when the
/// product vanishes on every cell.
template <class L>
    requires PairLikelihood<L>
LocationPmf update_posterior(const LocationPmf& prior, std::span<const Evidence> messages, const L& lik) {
    if (messages.empty()) return prior;
    LocationPmf post = prior;
    for (const Evidence& ev : messages) {
        if (ev.sender_pmf.size() != prior.size()) throw DomainError("message pmf and prior differ in size");
        const auto f = evidence_factor(lik, ev);
        for (std::size_t x = 0; x < post.size(); ++x) post[x] *= f[x];
        // rescale between factors to stay clear of underflow
        if (!post.normalize()) throw DegenerateEvidence("posterior annihilated by path loss evidence");
    }
    return post;
}

template <class L>
    requires PairLikelihood<L>
LocationPmf update_posterior(const LocationPmf& prior, std::initializer_list<Evidence> messages, const L& lik) {
    return update_posterior(prior, std::span<const Evidence>(messages.begin(), messages.size()), lik);
}

/// Maximum a-posteriori cell; ties go to the lowest index.
inline CellIndex decide(const LocationPmf& pmf) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pmf.size(); ++i)
        if (pmf[i] > pmf[best]) best = i;
    return CellIndex{static_cast<int>(best) + 1};
}

struct SampleRecord {
    int step = 0;
    int from = 0;
    int to = 0;
    double pl_db = 0.0;
};

/// Trace of one flood: who transmitted, who heard whom, and the reply route.
struct FloodEvent {
    int source = -1;
    std::vector<int> hop;     // -1 when never reached
    std::vector<int> parent;  // first sender heard, -1 for the source / unreached
    std::vector<int> visit_order;
    std::vector<int> transmitters;
    std::vector<std::pair<int, int>> deliveries; // (sender, receiver)
    std::vector<int> route;   // landmark first, source last; empty without a landmark

    bool visited(int id) const { return hop[static_cast<std::size_t>(id)] >= 0; }
};

struct EngineOptions {
    /// When set, pmfs sent by unknown nodes travel through the DCT codec with
    /// this payload limit. Landmarks always announce their exact cell.
    std::optional<int> codec_payload;
};

class SimState {
public:
    SimState(Scenario scenario, std::uint64_t stream_seed, EngineOptions options = {})
        : scenario_(std::move(scenario)),
          graph_(build_connectivity(scenario_)),
          node_table_(scenario_.field, scenario_.model_node),
          landmark_table_(scenario_.field, scenario_.model_landmark),
          rng_(stream_seed),
          options_(options) {}

    const Scenario& scenario() const { return scenario_; }
    const ConnectivityGraph& graph() const { return graph_; }
    const GridField& field() const { return scenario_.field; }
    const std::vector<SampleRecord>& samples() const { return samples_; }
    int step() const { return step_; }
    std::size_t annihilated_updates() const { return annihilated_; }
    RandomStream& rng() { return rng_; }

    const Node& node(int id) const { return scenario_.nodes.at(static_cast<std::size_t>(id)); }
    const LocationPmf& pmf(int id) const { return node(id).pmf; }
    std::size_t node_count() const { return scenario_.nodes.size(); }
    bool is_landmark(int id) const { return node(id).is_landmark(); }

    std::vector<int> unknown_ids() const {
        std::vector<int> ids;
        for (const Node& n : scenario_.nodes)
            if (!n.is_landmark()) ids.push_back(n.id);
        return ids;
    }

    const LikelihoodTable& table_for(int a, int b) const {
        return (is_landmark(a) || is_landmark(b)) ? landmark_table_ : node_table_;
    }

    /// One transmission from sender heard by each receiver in turn. Every
    /// reception draws a fresh path loss sample for the pair's true distance
    /// and logs it; an unknown receiver folds it into its pmf. An annihilated
    /// posterior keeps the prior.
    void multicast(int from, std::span<const int> receivers) {
        const Node& tx = node(from);
        std::optional<LocationPmf> coded;
        if (!tx.is_landmark() && options_.codec_payload) coded = decode(encode(tx.pmf, *options_.codec_payload));
        for (int to : receivers) {
            if (to == from) throw DomainError("a node cannot receive its own transmission");
            const Node& rx = node(to);
            const bool landmark_link = tx.is_landmark() || rx.is_landmark();
            const PathLossModel& model = landmark_link ? scenario_.model_landmark : scenario_.model_node;
            const double d = std::max(distance(tx.true_position, rx.true_position), model.d0_m);
            const double pl = sample_path_loss(model, d, rng_);
            samples_.push_back({step_, from, to, pl});
            if (rx.is_landmark()) continue;

            const Evidence ev{coded ? coded->values() : tx.pmf.values(), pl};
            Node& target = scenario_.nodes[static_cast<std::size_t>(to)];
            try {
                target.pmf = update_posterior(target.pmf, std::span<const Evidence>(&ev, 1), table_for(from, to));
            } catch (const DegenerateEvidence&) {
                ++annihilated_;
            }
        }
    }

    void deliver(int from, int to) { multicast(from, std::span<const int>(&to, 1)); }

    void advance_step() { ++step_; }

private:
    Scenario scenario_;
    ConnectivityGraph graph_;
    LikelihoodTable node_table_;
    LikelihoodTable landmark_table_;
    RandomStream rng_;
    EngineOptions options_;
    std::vector<SampleRecord> samples_;
    int step_ = 0;
    std::size_t annihilated_ = 0;
};

namespace detail {

/// Breadth-first multicast from origin. Every transmission reaches all
/// neighbours of the transmitter. The origin always transmits; a relay at hop
/// h forwards once, and only while h < hop_limit. Landmarks never relay, so a
/// branch ends at a landmark while the others run until the frontier empties.
/// With first_copy_only a node takes only the first copy it hears; otherwise
/// every copy delivered to it counts.
inline FloodEvent flood(SimState& state, int origin, bool first_copy_only) {
    const std::size_t n = state.node_count();
    FloodEvent ev;
    ev.source = origin;
    ev.hop.assign(n, -1);
    ev.parent.assign(n, -1);
    ev.hop[static_cast<std::size_t>(origin)] = 0;
    ev.visit_order.push_back(origin);

    const int hop_limit = state.scenario().hop_limit;
    std::vector<int> frontier{origin};
    for (int h = 0; !frontier.empty(); ++h) {
        std::vector<int> next;
        for (int tx : frontier) {
            if (tx != origin && (state.is_landmark(tx) || h >= hop_limit)) continue;
            ev.transmitters.push_back(tx);
            std::vector<int> accepted;
            for (int rx : state.graph().neighbors(tx)) {
                auto& hop = ev.hop[static_cast<std::size_t>(rx)];
                if (hop >= 0 && first_copy_only) continue;
                accepted.push_back(rx);
                ev.deliveries.emplace_back(tx, rx);
                if (hop < 0) {
                    hop = h + 1;
                    ev.parent[static_cast<std::size_t>(rx)] = tx;
                    ev.visit_order.push_back(rx);
                    next.push_back(rx);
                }
            }
            state.multicast(tx, accepted);
        }
        frontier = std::move(next);
    }
    return ev;
}

} // namespace detail

struct AdvertisementReport {
    /// Unknown nodes that no advertisement reached; their pmfs stay uniform.
    std::vector<int> uncovered;
};

/// Landmarks advertise in id order. Each advertisement starts with the
/// landmark's one-hop multicast and spreads through unknown relays until the
/// network is covered or the hop limit stops it.
inline AdvertisementReport advertise_landmarks(SimState& state) {
    std::vector<bool> covered(state.node_count(), false);
    for (std::size_t id = 0; id < state.node_count(); ++id) {
        if (!state.is_landmark(static_cast<int>(id))) continue;
        const FloodEvent ev = detail::flood(state, static_cast<int>(id), true);
        for (const auto& [tx, rx] : ev.deliveries) covered[static_cast<std::size_t>(rx)] = true;
    }
    AdvertisementReport report;
    for (int id : state.unknown_ids())
        if (!covered[static_cast<std::size_t>(id)]) report.uncovered.push_back(id);
    return report;
}

/// Route request flood from an unknown source; an unknown node updates once,
/// with the pmf of the first sender it hears. Records the min-hop route from the closest
/// landmark (lowest id on ties) back to the source. Advances the step counter.
inline FloodEvent rreq_flood(SimState& state, int source) {
    if (state.is_landmark(source)) throw DomainError("route request source must be an unknown node");
    FloodEvent ev = detail::flood(state, source, true);
    int best = -1;
    for (std::size_t id = 0; id < state.node_count(); ++id) {
        if (!state.is_landmark(static_cast<int>(id)) || ev.hop[id] < 0) continue;
        if (best < 0 || ev.hop[id] < ev.hop[static_cast<std::size_t>(best)]) best = static_cast<int>(id);
    }
    for (int v = best; v >= 0; v = ev.parent[static_cast<std::size_t>(v)]) ev.route.push_back(v);
    state.advance_step();
    return ev;
}

/// Route reply: each consecutive pair (i, j) on the landmark-to-source route
/// exchanges one packet and j updates against i's pmf.
inline void rrep_return(SimState& state, const FloodEvent& flood) {
    for (std::size_t k = 1; k < flood.route.size(); ++k) state.deliver(flood.route[k - 1], flood.route[k]);
}

struct RoundSnapshot {
    int round = 0;
    int source = -1;
    std::vector<CellIndex> decisions; // per node id
    std::vector<double> entropies;    // per node id, nats
};

struct Trajectory {
    AdvertisementReport advertisement;
    std::vector<RoundSnapshot> rounds; // rounds[0] follows the advertisement
};

using RoundObserver = std::function<void(const RoundSnapshot&, const SimState&)>;

namespace detail {

inline RoundSnapshot snapshot(const SimState& state, int round, int source) {
    RoundSnapshot snap{round, source, {}, {}};
    for (std::size_t id = 0; id < state.node_count(); ++id) {
        snap.decisions.push_back(decide(state.pmf(static_cast<int>(id))));
        snap.entropies.push_back(state.pmf(static_cast<int>(id)).entropy());
    }
    return snap;
}

template <class NextSource>
Trajectory run_rounds(SimState& state, int rounds, NextSource next_source, const RoundObserver& observer) {
    Trajectory out;
    out.advertisement = advertise_landmarks(state);
    out.rounds.push_back(snapshot(state, 0, -1));
    if (observer) observer(out.rounds.back(), state);
    for (int r = 1; r <= rounds; ++r) {
        const int source = next_source(r);
        const FloodEvent ev = rreq_flood(state, source);
        rrep_return(state, ev);
        out.rounds.push_back(snapshot(state, r, source));
        if (observer) observer(out.rounds.back(), state);
    }
    return out;
}

} // namespace detail

/// Advertisement, then one route discovery (request flood + reply) per round
/// with sources taken from `sources` in order.
inline Trajectory run(SimState& state, std::span<const int> sources, const RoundObserver& observer = {}) {
    return detail::run_rounds(
        state, static_cast<int>(sources.size()),
        [&](int r) { return sources[static_cast<std::size_t>(r - 1)]; }, observer);
}

/// Same with sources drawn uniformly over unknown nodes from the state's stream.
inline Trajectory run(SimState& state, int rounds, const RoundObserver& observer = {}) {
    if (rounds < 0) throw DomainError("round count must be non-negative");
    const auto unknowns = state.unknown_ids();
    return detail::run_rounds(
        state, rounds, [&](int) { return unknowns[state.rng().below(unknowns.size())]; }, observer);
}

} // namespace gridloc

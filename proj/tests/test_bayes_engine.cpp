#include "gridloc/bayes_engine.hpp"
#include "gridloc/experiment.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace gridloc;

namespace {

const PathLossModel below = PathLossModel::preset(CanopyMode::BelowCanopy);
const PathLossModel above = PathLossModel::preset(CanopyMode::AboveCanopy);

/// Arbitrary non-negative table P(pl | a, b) over a few integer pl values.
struct RandomLikelihood {
    GridField grid;
    int levels;
    std::vector<double> table;

    RandomLikelihood(GridField g, int lv, RandomStream& rng) : grid(g), levels(lv) {
        const int c = g.cell_count();
        table.resize(static_cast<std::size_t>(c * c * lv));
        for (double& v : table) v = rng.uniform() < 0.15 ? 0.0 : rng.uniform();
    }
    const GridField& field() const { return grid; }
    double lookup(CellIndex a, CellIndex b, double pl) const {
        const int c = grid.cell_count();
        return table[static_cast<std::size_t>(((a.value - 1) * c + (b.value - 1)) * levels + static_cast<int>(pl))];
    }
};

/// Forwards to a LikelihoodTable through the generic concept path.
struct GenericView {
    const LikelihoodTable& t;
    const GridField& field() const { return t.field(); }
    double lookup(CellIndex a, CellIndex b, double pl) const { return t.lookup(a, b, pl); }
};

std::vector<double> random_pmf(std::size_t n, RandomStream& rng, double zero_prob = 0.2) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform() < zero_prob ? 0.0 : rng.uniform();
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0; })) v[rng.below(n)] = 1;
    const double s = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& x : v) x /= s;
    return v;
}

Scenario hand_scenario(std::vector<std::pair<NodeRole, Coord>> nodes, int hop_limit = 8) {
    Scenario s{GridField(500, 30), below, above, {}, 120, 220, 1, 20, hop_limit};
    for (const auto& [role, p] : nodes)
        s.nodes.push_back({static_cast<int>(s.nodes.size()), role, p, 15.0,
                           role == NodeRole::Landmark ? delta_pmf(s.field, position_to_cell(s.field, p))
                                                      : uniform_pmf(s.field)});
    return s;
}

} // namespace

TEST(Decide, Examples) {
    const GridField f(60, 30);
    for (int c = 1; c <= 4; ++c) EXPECT_EQ(decide(delta_pmf(f, CellIndex{c})).value, c);
    EXPECT_EQ(decide(uniform_pmf(f)).value, 1);
    EXPECT_EQ(decide(LocationPmf({0.1, 0.5, 0.2, 0.2})).value, 2);
    EXPECT_EQ(decide(LocationPmf({0.1, 0.4, 0.1, 0.4})).value, 2);
}

TEST(Update, EmptyMessageListReturnsPrior) {
    const GridField f(90, 30);
    const auto table = build_likelihood(f, below);
    LocationPmf prior({0.1, 0.2, 0.05, 0.05, 0.1, 0.1, 0.2, 0.1, 0.1});
    EXPECT_EQ(update_posterior(prior, std::span<const Evidence>{}, table), prior);
}

TEST(Update, DeltaNeighbourReducesToLikelihoodProduct) {
    RandomStream rng(1);
    const auto f = GridField::from_hectares(6, 30);
    const auto table = build_likelihood(f, below);
    for (int k = 0; k < 100; ++k) {
        const CellIndex xi{1 + static_cast<int>(rng.below(81))};
        const auto sender = delta_pmf(f, xi);
        LocationPmf prior(random_pmf(81, rng, 0.0));
        const double mu = mean_path_loss(below, 30.0 * (1 + rng.below(8)));
        const double pl = std::round(mu + rng.normal(0, 3));
        std::vector<double> expect(81);
        for (int j = 1; j <= 81; ++j) expect[j - 1] = prior[j - 1] * table.lookup(CellIndex{j}, xi, pl);
        const double s = std::accumulate(expect.begin(), expect.end(), 0.0);
        if (s == 0) continue;
        const auto post = update_posterior(prior, {Evidence{sender.values(), pl}}, table);
        for (int j = 0; j < 81; ++j) ASSERT_NEAR(post[j], expect[j] / s, 1e-12);
    }
}

TEST(Update, MatchesBruteForceWithGridLikelihood) {
    RandomStream rng(2);
    for (int k = 0; k < 300; ++k) {
        const int m = 2 + static_cast<int>(rng.below(2));
        const GridField f(m * 30.0, 30.0);
        const auto table = build_likelihood(f, k % 2 ? below : above);
        const auto cells = static_cast<std::size_t>(m * m);
        const int nmsg = static_cast<int>(rng.below(4));
        std::vector<std::vector<double>> senders;
        std::vector<double> pls;
        std::vector<Evidence> evs;
        for (int i = 0; i < nmsg; ++i) {
            senders.push_back(random_pmf(cells, rng));
            pls.push_back(std::round(rng.uniform(95, 125)));
        }
        for (int i = 0; i < nmsg; ++i) evs.push_back({senders[i], pls[i]});
        const auto prior = random_pmf(cells, rng);
        const auto ref = oracle::product_update_brute_force(prior, senders, pls, [&](int xj, int xi, double pl) {
            return table.lookup(CellIndex{xj + 1}, CellIndex{xi + 1}, pl);
        });
        if (std::any_of(ref.begin(), ref.end(), [](double v) { return std::isnan(v); })) {
            EXPECT_THROW(update_posterior(LocationPmf(prior), evs, table), DegenerateEvidence);
            continue;
        }
        const auto post = update_posterior(LocationPmf(prior), evs, table);
        for (std::size_t x = 0; x < cells; ++x) ASSERT_NEAR(post[x], ref[x], 1e-12);
    }
}

TEST(Update, MatchesBruteForceWithArbitraryLikelihood) {
    RandomStream rng(3);
    for (int k = 0; k < 300; ++k) {
        const int m = 2 + static_cast<int>(rng.below(2));
        const RandomLikelihood lik(GridField(m * 10.0, 10.0), 4, rng);
        const auto cells = static_cast<std::size_t>(m * m);
        const int nmsg = 1 + static_cast<int>(rng.below(3));
        std::vector<std::vector<double>> senders;
        std::vector<double> pls;
        for (int i = 0; i < nmsg; ++i) {
            senders.push_back(random_pmf(cells, rng));
            pls.push_back(static_cast<double>(rng.below(4)));
        }
        std::vector<Evidence> evs;
        for (int i = 0; i < nmsg; ++i) evs.push_back({senders[i], pls[i]});
        const auto prior = random_pmf(cells, rng);
        const auto ref = oracle::product_update_brute_force(prior, senders, pls, [&](int xj, int xi, double pl) {
            return lik.lookup(CellIndex{xj + 1}, CellIndex{xi + 1}, pl);
        });
        if (std::any_of(ref.begin(), ref.end(), [](double v) { return std::isnan(v); })) continue;
        const auto post = update_posterior(LocationPmf(prior), evs, lik);
        for (std::size_t x = 0; x < cells; ++x) ASSERT_NEAR(post[x], ref[x], 1e-12);
    }
}

TEST(Update, HandBuiltTwoCellPairs) {
    // m = 2, one landmark at cell 4, likelihood keyed by (receiver, sender)
    RandomStream rng(4);
    const RandomLikelihood lik(GridField(20, 10), 1, rng);
    const LocationPmf prior({0.25, 0.25, 0.25, 0.25});
    const std::vector<double> sender{0, 0, 0, 1};
    const auto post = update_posterior(prior, {Evidence{sender, 0.0}}, lik);
    double s = 0;
    for (int j = 1; j <= 4; ++j) s += 0.25 * lik.lookup(CellIndex{j}, CellIndex{4}, 0);
    for (int j = 1; j <= 4; ++j) EXPECT_NEAR(post[j - 1], 0.25 * lik.lookup(CellIndex{j}, CellIndex{4}, 0) / s, 1e-15);
}

TEST(Update, FastPathEqualsGenericPath) {
    RandomStream rng(5);
    const auto f = GridField::from_hectares(20, 30);
    const auto table = build_likelihood(f, below);
    for (int k = 0; k < 20; ++k) {
        const auto sender = random_pmf(225, rng, 0.5);
        const double pl = std::round(rng.uniform(110, 150));
        const auto fast = evidence_factor(table, Evidence{sender, pl});
        const auto slow = evidence_factor(GenericView{table}, Evidence{sender, pl});
        for (std::size_t x = 0; x < 225; ++x) ASSERT_NEAR(fast[x], slow[x], 1e-15);
    }
}

TEST(Update, InvariantsNormalizationSupportOrder) {
    RandomStream rng(6);
    const auto f = GridField::from_hectares(6, 30);
    const auto table = build_likelihood(f, below);
    for (int k = 0; k < 100; ++k) {
        const auto prior = random_pmf(81, rng, 0.3);
        std::vector<std::vector<double>> senders;
        std::vector<Evidence> evs;
        for (int i = 0; i < 3; ++i) senders.push_back(random_pmf(81, rng, 0.3));
        for (int i = 0; i < 3; ++i) evs.push_back({senders[i], std::round(rng.uniform(105, 130))});
        LocationPmf post;
        try {
            post = update_posterior(LocationPmf(prior), evs, table);
        } catch (const DegenerateEvidence&) {
            continue;
        }
        EXPECT_NEAR(post.sum(), 1.0, 1e-9);
        for (std::size_t x = 0; x < 81; ++x)
            if (prior[x] == 0) ASSERT_EQ(post[x], 0.0);
        std::vector<Evidence> rev(evs.rbegin(), evs.rend());
        std::vector<Evidence> rot{evs[1], evs[2], evs[0]};
        const auto post_rev = update_posterior(LocationPmf(prior), rev, table);
        const auto post_rot = update_posterior(LocationPmf(prior), rot, table);
        for (std::size_t x = 0; x < 81; ++x) {
            ASSERT_NEAR(post[x], post_rev[x], 1e-12);
            ASSERT_NEAR(post[x], post_rot[x], 1e-12);
        }
    }
}

TEST(Update, AnnihilationIsReported) {
    const GridField f(60, 30);
    const auto table = build_likelihood(f, below);
    const auto sender = delta_pmf(f, CellIndex{1});
    EXPECT_THROW(update_posterior(uniform_pmf(f), {Evidence{sender.values(), 300.0}}, table), DegenerateEvidence);
    const std::vector<double> wrong_size{1.0};
    EXPECT_THROW(update_posterior(uniform_pmf(f), {Evidence{wrong_size, 100.0}}, table), DomainError);
}

TEST(Advertisement, IsolatedNodeStaysUniform) {
    auto s = hand_scenario({{NodeRole::Landmark, {10, 10}}, {NodeRole::Unknown, {400, 400}}}, 0);
    SimState st(std::move(s), 1);
    const auto report = advertise_landmarks(st);
    EXPECT_EQ(st.pmf(1), uniform_pmf(st.field()));
    EXPECT_EQ(report.uncovered, std::vector<int>{1});
}

TEST(Advertisement, SmallNoiseGivesDistanceRing) {
    // near-noiseless channel: mass sits on cells whose centroid distance to the
    // landmark's cell rounds to the same path loss bin as the true distance
    Scenario s = hand_scenario({{NodeRole::Landmark, {255, 255}}, {NodeRole::Unknown, {375, 255}}}, 0);
    s.model_landmark.sigma_db = 0.3;
    SimState st(std::move(s), 2);
    advertise_landmarks(st);
    const auto& pmf = st.pmf(1);
    EXPECT_NEAR(pmf.sum(), 1.0, 1e-12);
    const CellIndex lm = position_to_cell(st.field(), {255, 255});
    const double true_d = 120.0;
    double ring_mass = 0;
    for (int c = 1; c <= st.field().cell_count(); ++c) {
        const double d = distance(cell_centroid(st.field(), CellIndex{c}), cell_centroid(st.field(), lm));
        if (std::abs(mean_path_loss(above, std::max(d, 15.0)) - mean_path_loss(above, true_d)) <= 2.0)
            ring_mass += pmf[static_cast<std::size_t>(c - 1)];
    }
    EXPECT_GT(ring_mass, 0.999);
    // the ring is symmetric about the landmark cell: at least 4 cells carry mass
    EXPECT_GE(std::count_if(pmf.values().begin(), pmf.values().end(), [](double v) { return v > 1e-6; }), 4);
}

TEST(Advertisement, KeepsPmfsNormalized) {
    ScenarioConfig cfg;
    for (int t = 0; t < 5; ++t) {
        SimState st = make_trial_state(cfg, t);
        advertise_landmarks(st);
        for (std::size_t id = 0; id < st.node_count(); ++id)
            EXPECT_NEAR(st.pmf(static_cast<int>(id)).sum(), 1.0, 1e-9);
    }
}

TEST(Flood, ChainRouteAndUpdates) {
    // L(0) -- A(1) -- B(2), 100 m apart; landmark range 220 reaches A only
    auto s = hand_scenario({{NodeRole::Landmark, {50, 50}}, {NodeRole::Unknown, {150, 50}}, {NodeRole::Unknown, {250, 50}}});
    s.range_landmark_m = 150;
    SimState st(std::move(s), 3);
    const auto before = st.pmf(1);
    const auto ev = rreq_flood(st, 2);
    EXPECT_EQ(ev.route, (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(ev.deliveries, (std::vector<std::pair<int, int>>{{2, 1}, {1, 0}}));
    EXPECT_NE(st.pmf(1), before);
    EXPECT_EQ(st.samples().size(), 2U);
    EXPECT_EQ(st.step(), 1);
    EXPECT_EQ(st.pmf(0), delta_pmf(st.field(), position_to_cell(st.field(), {50, 50})));
}

TEST(Flood, DiamondEventTrace) {
    // S(1) reaches A(2) and B(3); both reach D(4); A and B are 120 m apart
    auto s = hand_scenario({{NodeRole::Landmark, {490, 490}},
                            {NodeRole::Unknown, {100, 200}},
                            {NodeRole::Unknown, {180, 260}},
                            {NodeRole::Unknown, {180, 140}},
                            {NodeRole::Unknown, {260, 200}}});
    SimState st(std::move(s), 4);
    ASSERT_EQ(st.graph().neighbors(4), (std::vector<int>{2, 3}));
    ASSERT_EQ(st.graph().neighbors(2), (std::vector<int>{1, 4}));
    ASSERT_EQ(st.graph().neighbors(0), std::vector<int>{});

    const auto ev = rreq_flood(st, 1);
    EXPECT_EQ(ev.transmitters, (std::vector<int>{1, 2, 3, 4}));
    // a node takes only the first copy; D hears A before B
    EXPECT_EQ(ev.deliveries, (std::vector<std::pair<int, int>>{{1, 2}, {1, 3}, {2, 4}}));
    EXPECT_EQ(ev.hop, (std::vector<int>{-1, 0, 1, 1, 2}));
    EXPECT_EQ(ev.parent[4], 2);
    EXPECT_TRUE(ev.route.empty());
    const auto to_d = std::count_if(st.samples().begin(), st.samples().end(), [](const SampleRecord& r) { return r.to == 4; });
    EXPECT_EQ(to_d, 1);
    EXPECT_EQ(st.samples().size(), ev.deliveries.size());
    for (const auto& r : st.samples()) EXPECT_EQ(r.step, 0);
}

TEST(Flood, HopLimitStopsRelays) {
    auto s = hand_scenario({{NodeRole::Landmark, {490, 490}},
                            {NodeRole::Unknown, {100, 100}},
                            {NodeRole::Unknown, {200, 100}},
                            {NodeRole::Unknown, {300, 100}}},
                           1);
    SimState st(std::move(s), 5);
    const auto ev = rreq_flood(st, 1);
    EXPECT_EQ(ev.transmitters, std::vector<int>{1});
    EXPECT_EQ(ev.hop[3], -1);
    EXPECT_EQ(st.pmf(3), uniform_pmf(st.field()));
    EXPECT_NE(st.pmf(2), uniform_pmf(st.field()));
}

TEST(Flood, StepAndSampleBookkeeping) {
    ScenarioConfig cfg;
    SimState st = make_trial_state(cfg, 0);
    advertise_landmarks(st);
    const auto unknowns = st.unknown_ids();
    for (int k = 0; k < 5; ++k) {
        const std::size_t before = st.samples().size();
        const auto ev = rreq_flood(st, unknowns[static_cast<std::size_t>(k * 7)]);
        EXPECT_EQ(st.step(), k + 1);
        EXPECT_EQ(st.samples().size() - before, ev.deliveries.size());
    }
}

TEST(Reply, UpdatesOnlyTheRoute) {
    ScenarioConfig cfg;
    SimState st = make_trial_state(cfg, 1);
    advertise_landmarks(st);
    const int source = st.unknown_ids()[60];
    const auto ev = rreq_flood(st, source);
    ASSERT_GE(ev.route.size(), 2U);
    std::vector<LocationPmf> before;
    for (std::size_t id = 0; id < st.node_count(); ++id) before.push_back(st.pmf(static_cast<int>(id)));
    const std::size_t first_sample = st.samples().size();
    rrep_return(st, ev);
    ASSERT_EQ(st.samples().size() - first_sample, ev.route.size() - 1);

    // replay the pair updates from the logged samples
    std::vector<LocationPmf> expect = before;
    for (std::size_t k = 1; k < ev.route.size(); ++k) {
        const int i = ev.route[k - 1], j = ev.route[k];
        const auto& rec = st.samples()[first_sample + k - 1];
        ASSERT_EQ(rec.from, i);
        ASSERT_EQ(rec.to, j);
        expect[static_cast<std::size_t>(j)] = update_posterior(
            expect[static_cast<std::size_t>(j)], {Evidence{expect[static_cast<std::size_t>(i)].values(), rec.pl_db}},
            st.table_for(i, j));
    }
    for (std::size_t id = 0; id < st.node_count(); ++id) EXPECT_EQ(st.pmf(static_cast<int>(id)), expect[id]) << id;
}

TEST(Reply, MinHopLandmarkWithLowestIdMatchesShortestPaths) {
    for (int t = 0; t < 30; ++t) {
        ScenarioConfig cfg;
        cfg.placement = Placement::Random;
        cfg.field_ha = 20;
        cfg.node_count = 60 + 5 * t;
        cfg.landmark_count = std::array{2, 3, 4, 6, 8}[t % 5];
        cfg.ptx_dbm_unknown = 10 + t % 6;
        cfg.hop_limit = 1000;
        SimState st = make_trial_state(cfg, t);
        const auto& nodes = st.scenario().nodes;
        const auto adj = oracle::brute_force_adjacency(st.scenario());
        std::vector<bool> relay(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) relay[i] = !nodes[i].is_landmark();
        const auto dist = oracle::hop_distances(adj, relay);

        for (int k = 0; k < 5; ++k) {
            const int source = st.unknown_ids()[static_cast<std::size_t>((k * 13 + t) % st.unknown_ids().size())];
            int best = -1;
            for (int l = 0; l < cfg.landmark_count; ++l)
                if (dist[source][l] < (1 << 20) && (best < 0 || dist[source][l] < dist[source][best])) best = l;
            const auto ev = rreq_flood(st, source);
            if (best < 0) {
                EXPECT_TRUE(ev.route.empty());
                continue;
            }
            ASSERT_FALSE(ev.route.empty());
            EXPECT_EQ(ev.route.front(), best);
            EXPECT_EQ(ev.route.back(), source);
            EXPECT_EQ(static_cast<int>(ev.route.size()) - 1, dist[source][best]);
            for (std::size_t h = 1; h < ev.route.size(); ++h) EXPECT_TRUE(adj[ev.route[h - 1]][ev.route[h]]);
        }
    }
}

TEST(Run, ZeroRoundsIsAdvertisementOnly) {
    ScenarioConfig cfg;
    SimState a = make_trial_state(cfg, 0);
    const auto traj = run(a, 0);
    ASSERT_EQ(traj.rounds.size(), 1U);
    SimState b = make_trial_state(cfg, 0);
    advertise_landmarks(b);
    for (std::size_t id = 0; id < b.node_count(); ++id)
        EXPECT_EQ(traj.rounds[0].decisions[id], decide(b.pmf(static_cast<int>(id))));
}

TEST(Run, DeterministicAndLandmarksImmutable) {
    ScenarioConfig cfg;
    cfg.max_steps = 10;
    SimState a = make_trial_state(cfg, 3), b = make_trial_state(cfg, 3);
    std::vector<LocationPmf> landmarks;
    for (int id = 0; id < 8; ++id) landmarks.push_back(a.pmf(id));
    const auto ta = run(a, 10), tb = run(b, 10);
    ASSERT_EQ(ta.rounds.size(), 11U);
    for (std::size_t r = 0; r < ta.rounds.size(); ++r) {
        EXPECT_EQ(ta.rounds[r].decisions, tb.rounds[r].decisions);
        EXPECT_EQ(ta.rounds[r].entropies, tb.rounds[r].entropies);
        EXPECT_EQ(ta.rounds[r].source, tb.rounds[r].source);
    }
    for (int id = 0; id < 8; ++id) EXPECT_EQ(a.pmf(id), landmarks[static_cast<std::size_t>(id)]);
    for (std::size_t id = 0; id < a.node_count(); ++id) EXPECT_EQ(a.pmf(static_cast<int>(id)), b.pmf(static_cast<int>(id)));
}

TEST(Run, ExplicitSources) {
    ScenarioConfig cfg;
    SimState st = make_trial_state(cfg, 0);
    const std::vector<int> sources{20, 30, 40};
    const auto traj = run(st, sources);
    ASSERT_EQ(traj.rounds.size(), 4U);
    for (std::size_t r = 1; r < 4; ++r) EXPECT_EQ(traj.rounds[r].source, sources[r - 1]);
    SimState bad = make_trial_state(cfg, 0);
    const std::vector<int> landmark_source{0};
    EXPECT_THROW(run(bad, landmark_source), DomainError);
}

TEST(Run, AdvertisementReducesEntropy) {
    ScenarioConfig cfg;
    cfg.field_ha = 6;
    cfg.landmark_count = 6;
    double before = 0, after = 0;
    int count = 0;
    for (int t = 0; t < 100; ++t) {
        SimState st = make_trial_state(cfg, t);
        for (int id : st.unknown_ids()) before += st.pmf(id).entropy();
        advertise_landmarks(st);
        for (int id : st.unknown_ids()) {
            after += st.pmf(id).entropy();
            ++count;
        }
    }
    EXPECT_NEAR(before / count, std::log(81.0), 1e-12);
    EXPECT_LT(after / count, before / count);
}

TEST(Run, ErrorTrajectoryFlattensAfterRoundThree) {
    ScenarioConfig cfg;
    std::vector<TrialResult> results;
    for (int t = 0; t < 50; ++t) results.push_back(run_trial(cfg, t).result);
    const auto rounds = pool_rounds(results);
    ASSERT_EQ(rounds.size(), 21U);
    double best = rounds[3].two_drms;
    for (std::size_t r = 4; r < rounds.size(); ++r) {
        EXPECT_LE(rounds[r].two_drms, best + 5.0) << "round " << r;
        best = std::min(best, rounds[r].two_drms);
    }
}

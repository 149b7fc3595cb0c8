#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mmei/error.hpp"
#include "mmei/recommender.hpp"
#include "mmei/rng.hpp"

using namespace mmei;

namespace {

std::vector<ContentItem> random_catalog(std::mt19937_64& rng, std::size_t n, std::size_t d, bool coarse = false) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> small(-2, 2);
    std::vector<ContentItem> out;
    for (std::size_t i = 0; i < n; ++i) {
        ContentItem c{"c" + std::to_string(1000 + (i * 7919) % 1000), {}, "{}"};
        for (std::size_t j = 0; j < d; ++j) c.embedding.push_back(coarse ? small(rng) : g(rng));
        out.push_back(std::move(c));
    }
    return out;
}

// Full sort of every item by (score desc, id asc), truncated.
std::vector<std::string> sort_oracle(const std::vector<double>& u, const std::vector<ContentItem>& catalog, std::size_t k) {
    std::vector<std::pair<double, std::string>> all;
    for (const auto& c : catalog) {
        double s = 0;
        for (std::size_t j = 0; j < u.size(); ++j) s += u[j] * c.embedding[j];
        all.push_back({-s, c.id});
    }
    std::sort(all.begin(), all.end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
    return out;
}

}  // namespace

TEST(Score, Examples) {
    std::vector<double> u{1, 2};
    EXPECT_EQ(score(u, {"a", {3, -1}, "{}"}), 1.0);
    EXPECT_EQ(score(u, {"a", {2, -1}, "{}"}), 0.0);
    std::vector<double> e{0, 1};
    EXPECT_EQ(score(e, {"a", {0, 1}, "{}"}), 1.0);
    EXPECT_THROW(score(u, {"a", {1, 2, 3}, "{}"}), ShapeError);
}

TEST(RankTopK, FiveItemsKThree) {
    std::vector<ContentItem> cat{{"a", {1, 0}, "{}"}, {"b", {0, 1}, "{}"}, {"c", {2, 2}, "{}"}, {"d", {-1, 0}, "{}"}, {"e", {0.5, 0.5}, "{}"}};
    std::vector<double> u{1, 0.5};
    auto r = rank_top_k(u, cat, 3);
    EXPECT_EQ(r.ids(), (std::vector<std::string>{"c", "a", "e"}));
    EXPECT_EQ(r.entries[0].score, 3.0);
}

TEST(RankTopK, KBeyondCatalogAndZero) {
    std::vector<ContentItem> cat{{"b", {1}, "{}"}, {"a", {1}, "{}"}};
    std::vector<double> u{1};
    EXPECT_EQ(rank_top_k(u, cat, 10).ids(), (std::vector<std::string>{"a", "b"}));
    EXPECT_THROW(rank_top_k(u, cat, 0), ParameterError);
    EXPECT_THROW(rank_top_k(u, {}, 1), InputError);
}

TEST(RankTopK, AlignedUnitItemRanksFirst) {
    std::mt19937_64 rng(4);
    auto cat = random_catalog(rng, 30, 5);
    for (auto& c : cat) {
        double n = 0;
        for (double x : c.embedding) n += x * x;
        for (double& x : c.embedding) x /= std::sqrt(n);
    }
    std::vector<double> u{3, -1, 2, 0.5, 1};
    double n = 0;
    for (double x : u) n += x * x;
    ContentItem aligned{"zz", {}, "{}"};
    for (double x : u) aligned.embedding.push_back(x / std::sqrt(n));
    cat.push_back(aligned);
    EXPECT_EQ(rank_top_k(u, cat, 1).entries[0].id, "zz");
}

TEST(RankTopK, MatchesBruteForceSort) {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<std::size_t> size(1, 100), kk(1, 120);
    for (int trial = 0; trial < 300; ++trial) {
        // Coarse integer embeddings force plenty of score ties.
        auto cat = random_catalog(rng, size(rng), 3, trial % 2 == 0);
        std::vector<double> u{1, -1, 2};
        const std::size_t k = kk(rng);
        auto got = rank_top_k(u, cat, k);
        EXPECT_EQ(got.ids(), sort_oracle(u, cat, k));
        for (std::size_t i = 1; i < got.entries.size(); ++i) EXPECT_GE(got.entries[i - 1].score, got.entries[i].score);
        EXPECT_EQ(got.to_json(), rank_top_k(u, cat, k).to_json());
    }
}

TEST(Reward, Examples) {
    EXPECT_EQ(reward({{}, "a", 0, 0, false}), 0.0);
    EXPECT_EQ(reward({{}, "a", 60, 3, true}), 1.0);
    EXPECT_EQ(reward({{}, "a", 600, 30, true}), 1.0);
    EXPECT_DOUBLE_EQ(reward({{}, "a", 30, 0, false}), 0.25);
}

TEST(Reward, Bounded) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dwell(-10, 1000), w(0, 2);
    std::uniform_int_distribution<std::size_t> rep(0, 20);
    for (int i = 0; i < 10000; ++i) {
        RewardConfig cfg{w(rng), w(rng), w(rng), 60, 3};
        const double r = reward({{}, "a", dwell(rng), rep(rng), i % 2 == 0}, cfg);
        EXPECT_GE(r, 0.0);
        EXPECT_LE(r, 1.0);
    }
}

TEST(FeedbackUpdate, FixedPointWhenRewardMatchesSigmoid) {
    // ⟨u, e⟩ = 0 → σ = 0.5; dwell 60 alone gives reward 0.5.
    std::vector<ContentItem> cat{{"a", {1, -1}, "{}"}};
    feedback_update({{1, 1}, "a", 60, 0, false}, cat, 0.5);
    EXPECT_EQ(cat[0].embedding, (std::vector<double>{1, -1}));
}

TEST(FeedbackUpdate, PositiveFeedbackRaisesScoreAndIsLocal) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        auto cat = random_catalog(rng, 8, 4);
        auto before = cat;
        std::vector<double> u{0.3, -1.2, 0.8, 0.1};
        const double s0 = score(u, cat[3]);
        feedback_update({u, cat[3].id, 60, 3, true}, cat, 0.1);
        EXPECT_GT(score(u, cat[3]), s0);
        for (std::size_t i = 0; i < cat.size(); ++i)
            if (i != 3) EXPECT_EQ(cat[i].embedding, before[i].embedding);
    }
}

TEST(FeedbackUpdate, UnknownId) {
    std::vector<ContentItem> cat{{"a", {1}, "{}"}};
    EXPECT_THROW(feedback_update({{1}, "nope", 0, 0, false}, cat, 0.1), LookupError);
}

namespace {

struct Fixture {
    std::vector<SimulationUser> users;
    std::vector<ContentItem> catalog;
    std::set<std::string> favored;
};

// Two item groups in 6-D; users lean toward the unfavored group.
Fixture make_fixture(std::uint64_t seed) {
    auto rng = make_rng(seed, {99});
    std::normal_distribution<double> g(0.0, 1.0);
    Fixture f;
    for (int i = 0; i < 40; ++i) {
        const bool fav = i % 2 == 0;
        ContentItem c{"c" + std::to_string(100 + i), {}, fav ? "{\"emotion\":\"joy\"}" : "{\"emotion\":\"sadness\"}"};
        for (int j = 0; j < 6; ++j) c.embedding.push_back(0.5 * g(rng) + (j == (fav ? 0 : 1) ? 1.0 : 0.0));
        f.catalog.push_back(std::move(c));
    }
    for (int u = 0; u < 12; ++u) {
        SimulationUser s{"u" + std::to_string(u), {}};
        for (int j = 0; j < 6; ++j) s.fused.push_back(0.7 * g(rng) + (j == 1 ? 1.5 : 0.3));
        f.users.push_back(std::move(s));
    }
    f.favored = items_with_metadata(f.catalog, "emotion", "joy");
    return f;
}

// Independent replay of the loop on plain vectors.
double oracle_mean_rank(const Fixture& f, const std::vector<std::vector<double>>& emb) {
    double total = 0;
    for (const auto& u : f.users) {
        std::vector<ContentItem> cat = f.catalog;
        for (std::size_t i = 0; i < cat.size(); ++i) cat[i].embedding = emb[i];
        const auto order = sort_oracle(u.fused, cat, cat.size());
        double s = 0;
        for (std::size_t r = 0; r < order.size(); ++r)
            if (f.favored.count(order[r])) s += static_cast<double>(r + 1);
        total += s / static_cast<double>(f.favored.size());
    }
    return total / static_cast<double>(f.users.size());
}

std::vector<std::vector<double>> oracle_run(const Fixture& f, const SimulationConfig& cfg) {
    std::vector<std::vector<double>> emb;
    for (const auto& c : f.catalog) emb.push_back(c.embedding);
    auto rng = make_rng(cfg.seed, {stream::kSimulation});
    std::uniform_int_distribution<std::size_t> pu(0, f.users.size() - 1);
    for (std::size_t round = 0; round < cfg.rounds; ++round) {
        const auto& u = f.users[pu(rng)];
        std::vector<ContentItem> cat = f.catalog;
        for (std::size_t i = 0; i < cat.size(); ++i) cat[i].embedding = emb[i];
        const auto top = sort_oracle(u.fused, cat, cfg.k);
        std::uniform_int_distribution<std::size_t> pi(0, top.size() - 1);
        const std::string id = top[pi(rng)];
        std::size_t idx = 0;
        while (f.catalog[idx].id != id) ++idx;
        const bool fav = f.favored.count(id) > 0;
        const double r = fav ? 1.0 : 0.5 * cfg.other_dwell / 60.0;
        double s = 0;
        for (std::size_t j = 0; j < u.fused.size(); ++j) s += u.fused[j] * emb[idx][j];
        const double g = cfg.step * (r - 1.0 / (1.0 + std::exp(-s)));
        for (std::size_t j = 0; j < u.fused.size(); ++j) emb[idx][j] += g * u.fused[j];
    }
    return emb;
}

}  // namespace

TEST(Simulation, FavoredRankImprovesAndMatchesOracle) {
    for (std::uint64_t seed : {1, 2}) {
        Fixture f = make_fixture(seed);
        ASSERT_EQ(f.favored.size(), 20u);
        SimulationConfig cfg;
        cfg.seed = seed;
        auto res = simulate_feedback(f.users, f.catalog, f.favored, cfg);
        ASSERT_EQ(res.trace.size(), 200u);
        std::vector<std::vector<double>> base;
        for (const auto& c : f.catalog) base.push_back(c.embedding);
        const auto emb = oracle_run(f, cfg);
        EXPECT_NEAR(res.summary.mean_rank_before, oracle_mean_rank(f, base), 1e-12);
        EXPECT_NEAR(res.summary.mean_rank_after, oracle_mean_rank(f, emb), 1e-12);
        EXPECT_LT(res.summary.mean_rank_after, res.summary.mean_rank_before) << "seed " << seed;
        for (std::size_t i = 0; i < emb.size(); ++i)
            for (std::size_t j = 0; j < emb[i].size(); ++j) EXPECT_NEAR(res.catalog[i].embedding[j], emb[i][j], 1e-12);
    }
}

TEST(Simulation, ZeroRoundsIsNoOp) {
    Fixture f = make_fixture(3);
    SimulationConfig cfg;
    cfg.rounds = 0;
    auto res = simulate_feedback(f.users, f.catalog, f.favored, cfg);
    EXPECT_TRUE(res.trace.empty());
    EXPECT_EQ(res.summary.hr_before, res.summary.hr_after);
    EXPECT_EQ(res.summary.mean_rank_before, res.summary.mean_rank_after);
    for (std::size_t i = 0; i < f.catalog.size(); ++i) EXPECT_EQ(res.catalog[i].embedding, f.catalog[i].embedding);
}

TEST(Simulation, TraceCsvAndDeterminism) {
    Fixture f = make_fixture(4);
    SimulationConfig cfg;
    cfg.rounds = 20;
    cfg.seed = 8;
    const std::string a = trace_csv(simulate_feedback(f.users, f.catalog, f.favored, cfg).trace);
    const std::string b = trace_csv(simulate_feedback(f.users, f.catalog, f.favored, cfg).trace);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.substr(0, a.find('\n')), "round,user_id,recommended_id,reward,rank_of_best_item");
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 21);
}

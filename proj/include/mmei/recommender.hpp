#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mmei/dataio.hpp"

namespace mmei {

struct RankedEntry {
    std::string id;
    double score = 0.0;
};

/// Descending by score, ties by ascending id.
struct RankedList {
    std::vector<RankedEntry> entries;

    std::vector<std::string> ids() const;
    std::string to_json() const;
};

/// One consumption of `content_id` by the user whose fused vector is `user`.
struct FeedbackEvent {
    std::vector<double> user;
    std::string content_id;
    double dwell_seconds = 0.0;
    std::size_t replays = 0;
    bool liked = false;
};

struct RewardConfig {
    double w_dwell = 0.5;
    double w_replay = 0.2;
    double w_like = 0.3;
    double dwell_saturation = 60.0;
    double replay_saturation = 3.0;

    void validate() const;
};

/// ⟨F_u, E_c⟩.
double score(std::span<const double> user, const ContentItem& item);

/// k best items; the whole catalog when k exceeds its size.
RankedList rank_top_k(std::span<const double> user, const std::vector<ContentItem>& catalog, std::size_t k);

/// clamp(w_d·min(dwell/τ,1) + w_r·min(replays/ρ,1) + w_l·liked, 0, 1).
double reward(const FeedbackEvent& event, const RewardConfig& config = {});

/// E_c += step·(reward − σ(⟨F_u,E_c⟩))·F_u on the consumed item only.
void feedback_update(const FeedbackEvent& event, std::vector<ContentItem>& catalog, double step,
                     const RewardConfig& config = {});

struct SimulationUser {
    std::string id;
    std::vector<double> fused;
};

struct SimulationConfig {
    std::size_t rounds = 200;
    std::size_t k = 10;
    double step = 0.05;
    std::uint64_t seed = 0;
    RewardConfig reward;
    // Signals attached to consumptions of favored and other items.
    double favored_dwell = 90.0;
    std::size_t favored_replays = 3;
    double other_dwell = 5.0;

    void validate() const;
};

struct TraceRow {
    std::size_t round = 0;
    std::string user_id;
    std::string recommended_id;
    double reward = 0.0;
    std::size_t rank_of_best_item = 0;
};

struct SimulationSummary {
    std::size_t rounds = 0;
    std::size_t k = 0;
    double hr_before = 0.0;
    double hr_after = 0.0;
    double mean_rank_before = 0.0;
    double mean_rank_after = 0.0;

    std::string to_json() const;
};

struct SimulationResult {
    std::vector<TraceRow> trace;
    SimulationSummary summary;
    std::vector<ContentItem> catalog;
};

/// Ids of catalog items whose metadata field `key` equals `value`.
std::set<std::string> items_with_metadata(const std::vector<ContentItem>& catalog, const std::string& key,
                                          const std::string& value);

/// Mean 1-based full-catalog rank of the favored items, averaged over users.
double mean_favored_rank(const std::vector<SimulationUser>& users, const std::vector<ContentItem>& catalog,
                         const std::set<std::string>& favored);

/// Fraction of users with a favored item in their top-k.
double favored_hit_ratio(const std::vector<SimulationUser>& users, const std::vector<ContentItem>& catalog,
                         const std::set<std::string>& favored, std::size_t k);

/// Each round a random user is served its top-k, consumes one of those items at
/// random, and the resulting reward is applied online.
SimulationResult simulate_feedback(const std::vector<SimulationUser>& users, std::vector<ContentItem> catalog,
                                   const std::set<std::string>& favored, const SimulationConfig& config);

std::string trace_csv(const std::vector<TraceRow>& trace);

}  // namespace mmei

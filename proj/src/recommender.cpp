#include "mmei/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "mmei/error.hpp"
#include "mmei/rng.hpp"

namespace mmei {

namespace {

bool ranks_before(const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::size_t rank_of(const RankedList& full, const std::string& id) {
    for (std::size_t i = 0; i < full.entries.size(); ++i)
        if (full.entries[i].id == id) return i + 1;
    throw LookupError("rank_of: unknown content id '" + id + "'");
}

}  // namespace

std::vector<std::string> RankedList::ids() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.id);
    return out;
}

std::string RankedList::to_json() const {
    std::string out = "{\"entries\":[";
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) out += ",";
        out += "{\"id\":" + nlohmann::json(entries[i].id).dump() + ",\"score\":" + format_double(entries[i].score) + "}";
    }
    return out + "]}\n";
}

void RewardConfig::validate() const {
    if (!(dwell_saturation > 0) || !(replay_saturation > 0)) throw ParameterError("reward: saturation constants must be > 0");
    if (!(w_dwell >= 0) || !(w_replay >= 0) || !(w_like >= 0)) throw ParameterError("reward: weights must be >= 0");
}

double score(std::span<const double> user, const ContentItem& item) {
    if (user.size() != item.embedding.size()) {
        throw ShapeError("score: user width " + std::to_string(user.size()) + " vs item '" + item.id + "' width " +
                         std::to_string(item.embedding.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < user.size(); ++i) s += user[i] * item.embedding[i];
    return s;
}

RankedList rank_top_k(std::span<const double> user, const std::vector<ContentItem>& catalog, std::size_t k) {
    if (k == 0) throw ParameterError("rank_top_k: k must be >= 1");
    if (catalog.empty()) throw InputError("rank_top_k: empty catalog");
    RankedList out;
    out.entries.reserve(catalog.size());
    for (const auto& item : catalog) out.entries.push_back({item.id, score(user, item)});
    const std::size_t keep = std::min(k, catalog.size());
    std::partial_sort(out.entries.begin(), out.entries.begin() + static_cast<std::ptrdiff_t>(keep), out.entries.end(), ranks_before);
    out.entries.resize(keep);
    return out;
}

double reward(const FeedbackEvent& event, const RewardConfig& config) {
    const double dwell = std::min(std::max(event.dwell_seconds, 0.0) / config.dwell_saturation, 1.0);
    const double replays = std::min(static_cast<double>(event.replays) / config.replay_saturation, 1.0);
    const double r = config.w_dwell * dwell + config.w_replay * replays + config.w_like * (event.liked ? 1.0 : 0.0);
    return std::clamp(r, 0.0, 1.0);
}

void feedback_update(const FeedbackEvent& event, std::vector<ContentItem>& catalog, double step, const RewardConfig& config) {
    auto it = std::find_if(catalog.begin(), catalog.end(), [&](const ContentItem& c) { return c.id == event.content_id; });
    if (it == catalog.end()) throw LookupError("feedback_update: unknown content id '" + event.content_id + "'");
    const double g = step * (reward(event, config) - sigmoid(score(event.user, *it)));
    for (std::size_t i = 0; i < event.user.size(); ++i) it->embedding[i] += g * event.user[i];
}

void SimulationConfig::validate() const {
    if (k == 0) throw ParameterError("simulation: k must be >= 1");
    if (!(step >= 0) || !std::isfinite(step)) throw ParameterError("simulation: step must be finite and >= 0");
    reward.validate();
}

std::string SimulationSummary::to_json() const {
    nlohmann::ordered_json o;
    o["rounds"] = rounds;
    o["k"] = k;
    o["hr_before"] = hr_before;
    o["hr_after"] = hr_after;
    o["mean_favored_rank_before"] = mean_rank_before;
    o["mean_favored_rank_after"] = mean_rank_after;
    return o.dump();
}

std::set<std::string> items_with_metadata(const std::vector<ContentItem>& catalog, const std::string& key, const std::string& value) {
    std::set<std::string> out;
    for (const auto& item : catalog) {
        const auto meta = nlohmann::json::parse(item.metadata);
        if (auto it = meta.find(key); it != meta.end() && it->is_string() && it->get<std::string>() == value) out.insert(item.id);
    }
    return out;
}

double mean_favored_rank(const std::vector<SimulationUser>& users, const std::vector<ContentItem>& catalog,
                         const std::set<std::string>& favored) {
    if (users.empty() || favored.empty()) return 0.0;
    double total = 0.0;
    for (const auto& u : users) {
        const RankedList full = rank_top_k(u.fused, catalog, catalog.size());
        double s = 0.0;
        for (const auto& id : favored) s += static_cast<double>(rank_of(full, id));
        total += s / static_cast<double>(favored.size());
    }
    return total / static_cast<double>(users.size());
}

double favored_hit_ratio(const std::vector<SimulationUser>& users, const std::vector<ContentItem>& catalog,
                         const std::set<std::string>& favored, std::size_t k) {
    if (users.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& u : users) {
        for (const auto& e : rank_top_k(u.fused, catalog, k).entries) {
            if (favored.count(e.id)) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(users.size());
}

SimulationResult simulate_feedback(const std::vector<SimulationUser>& users, std::vector<ContentItem> catalog,
                                   const std::set<std::string>& favored, const SimulationConfig& config) {
    config.validate();
    if (users.empty()) throw InputError("simulate_feedback: no users");
    if (catalog.empty()) throw InputError("simulate_feedback: empty catalog");
    if (favored.empty()) throw InputError("simulate_feedback: no favored items");

    SimulationResult res;
    res.summary.rounds = config.rounds;
    res.summary.k = config.k;
    res.summary.hr_before = favored_hit_ratio(users, catalog, favored, config.k);
    res.summary.mean_rank_before = mean_favored_rank(users, catalog, favored);

    auto rng = make_rng(config.seed, {stream::kSimulation});
    std::uniform_int_distribution<std::size_t> pick_user(0, users.size() - 1);
    for (std::size_t round = 1; round <= config.rounds; ++round) {
        const SimulationUser& u = users[pick_user(rng)];
        const RankedList served = rank_top_k(u.fused, catalog, config.k);
        std::uniform_int_distribution<std::size_t> pick_item(0, served.entries.size() - 1);
        const std::string& chosen = served.entries[pick_item(rng)].id;

        FeedbackEvent ev{u.fused, chosen, config.other_dwell, 0, false};
        if (favored.count(chosen)) ev = {u.fused, chosen, config.favored_dwell, config.favored_replays, true};
        const double r = reward(ev, config.reward);
        feedback_update(ev, catalog, config.step, config.reward);

        const RankedList full = rank_top_k(u.fused, catalog, catalog.size());
        std::size_t best = full.entries.size();
        for (std::size_t i = 0; i < full.entries.size(); ++i) {
            if (favored.count(full.entries[i].id)) {
                best = i + 1;
                break;
            }
        }
        res.trace.push_back({round, u.id, chosen, r, best});
    }

    res.summary.hr_after = favored_hit_ratio(users, catalog, favored, config.k);
    res.summary.mean_rank_after = mean_favored_rank(users, catalog, favored);
    res.catalog = std::move(catalog);
    return res;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::string out = "round,user_id,recommended_id,reward,rank_of_best_item\n";
    for (const auto& t : trace) {
        out += std::to_string(t.round) + "," + t.user_id + "," + t.recommended_id + "," + format_double(t.reward) + "," +
               std::to_string(t.rank_of_best_item) + "\n";
    }
    return out;
}

}  // namespace mmei

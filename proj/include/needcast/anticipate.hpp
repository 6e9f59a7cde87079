#pragma once

#include "relevance.hpp"
#include "temporal.hpp"
#include "transitions.hpp"

namespace needcast {

enum class ModelKind { m0, m1, m2, m3 };

inline ModelKind parse_model(std::string_view s) {
    auto v = text::to_lower(s);
    if (v == "m0") return ModelKind::m0;
    if (v == "m1") return ModelKind::m1;
    if (v == "m2") return ModelKind::m2;
    if (v == "m3") return ModelKind::m3;
    throw UsageError("unknown model '" + std::string(s) + "' (expected m0|m1|m2|m3)");
}

inline std::string to_string(ModelKind m) {
    switch (m) {
        case ModelKind::m0: return "m0";
        case ModelKind::m1: return "m1";
        case ModelKind::m2: return "m2";
        case ModelKind::m3: return "m3";
    }
    return "?";
}

struct ScoredNeed {
    NeedId need;
    double score = 0.0;

    friend bool operator==(const ScoredNeed&, const ScoredNeed&) = default;
};

/// Needs ordered by descending score, ties by need id.
struct NeedRanking {
    ActivityId last_activity;
    ModelKind model = ModelKind::m0;
    std::vector<ScoredNeed> entries;

    [[nodiscard]] std::vector<NeedId> needs() const {
        std::vector<NeedId> out;
        out.reserve(entries.size());
        for (const auto& e : entries) out.push_back(e.need);
        return out;
    }

    [[nodiscard]] std::map<NeedId, double> scores() const {
        std::map<NeedId, double> out;
        for (const auto& e : entries) out[e.need] = e.score;
        return out;
    }
};

inline NeedRanking make_ranking(const ActivityId& last, ModelKind model, const Distribution<NeedId>& scores) {
    NeedRanking r{last, model, {}};
    for (const auto& [i, s] : sorted_by_mass(scores)) {
        if (!std::isfinite(s)) throw DataError("non-finite score for need " + i.str());
        r.entries.push_back({i, s});
    }
    return r;
}

/// Scores rescaled to sum to one, for display. Ordering is unchanged.
inline NeedRanking normalized(NeedRanking r) {
    double total = 0.0;
    for (const auto& e : r.entries) total += e.score;
    if (total > 0.0) {
        for (auto& e : r.entries) e.score /= total;
    }
    return r;
}

inline std::vector<NeedId> top_k(const NeedRanking& ranking, std::size_t k) {
    if (k == 0) throw UsageError("top_k: k must be >= 1");
    std::vector<NeedId> out;
    for (std::size_t r = 0; r < ranking.entries.size() && r < k; ++r) out.push_back(ranking.entries[r].need);
    return out;
}

namespace detail {

inline const Distribution<NeedId>& relevance_of(const RelevanceTable& table, const ActivityId& a) {
    static const Distribution<NeedId> empty;
    auto it = table.find(a);
    return it == table.end() ? empty : it->second;
}

/// Adds weight(i, a_next) * P(i|a_next) * P(a_next|a_last) over the
/// next-activity distribution.
template <typename Weight>
void accumulate_next(Distribution<NeedId>& scores, const RelevanceTable& relevance,
                     const Distribution<ActivityId>& next, Weight&& weight) {
    for (const auto& [a_next, p_next] : next) {
        if (p_next == 0.0) continue;
        for (const auto& [i, p_need] : relevance_of(relevance, a_next)) {
            scores[i] += weight(i, a_next) * p_need * p_next;
        }
    }
}

}  // namespace detail

/// Context-free baseline: global need frequency.
inline NeedRanking rank_m0(const NeedCounts& counts, const ActivityId& last = {}) {
    std::int64_t total = 0;
    for (const auto& [i, n] : counts.global()) total += n;
    if (total == 0) throw DataError("empty need corpus");
    Distribution<NeedId> scores;
    for (const auto& [i, n] : counts.global()) scores[i] = static_cast<double>(n) / static_cast<double>(total);
    return make_ranking(last, ModelKind::m0, scores);
}

/// sum over a_next of P(i|a_next) P(a_next|a_last).
inline NeedRanking rank_m1(const RelevanceTable& relevance, const TransitionModel& transitions,
                           const ActivityTaxonomy& taxonomy, const ActivityId& last) {
    auto next = next_activity_dist(transitions, taxonomy, last);
    Distribution<NeedId> scores;
    detail::accumulate_next(scores, relevance, next, [](const NeedId&, const ActivityId&) { return 1.0; });
    return make_ranking(last, ModelKind::m1, scores);
}

/// gamma P(i|a_last) + (1 - gamma) M1(i).
inline NeedRanking rank_m2(const RelevanceTable& relevance, const TransitionModel& transitions,
                           const ActivityTaxonomy& taxonomy, const ActivityId& last, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw UsageError("gamma must lie in [0, 1]");
    auto next = next_activity_dist(transitions, taxonomy, last);
    Distribution<NeedId> ahead;
    detail::accumulate_next(ahead, relevance, next, [](const NeedId&, const ActivityId&) { return 1.0; });
    Distribution<NeedId> scores;
    for (const auto& [i, p] : detail::relevance_of(relevance, last)) scores[i] += gamma * p;
    for (const auto& [i, s] : ahead) scores[i] += (1.0 - gamma) * s;
    return make_ranking(last, ModelKind::m2, scores);
}

/// P(post|i,a_last) P(i|a_last) + sum over a_next of
/// P(pre|i,a_next) P(i|a_next) P(a_next|a_last). Unnormalized.
inline NeedRanking rank_m3(const RelevanceTable& relevance, const TransitionModel& transitions,
                           const ActivityTaxonomy& taxonomy, const TemporalModel& temporal,
                           const ActivityId& last) {
    auto next = next_activity_dist(transitions, taxonomy, last);
    Distribution<NeedId> scores;
    for (const auto& [i, p] : detail::relevance_of(relevance, last)) {
        scores[i] += temporal.scope(last, i).post() * p;
    }
    detail::accumulate_next(scores, relevance, next, [&](const NeedId& i, const ActivityId& a_next) {
        return temporal.scope(a_next, i).pre();
    });
    return make_ranking(last, ModelKind::m3, scores);
}

/// Fitted components bundled for ranking at one hierarchy level.
struct Anticipator {
    const ActivityTaxonomy& taxonomy;
    const NeedCounts& counts;
    const RelevanceTable& relevance;
    const TransitionModel& transitions;
    const TemporalModel& temporal;
    double gamma = 0.0;

    [[nodiscard]] NeedRanking rank(ModelKind model, const ActivityId& last) const {
        if (!taxonomy.contains(last)) throw DataError("unknown activity: " + last.str());
        switch (model) {
            case ModelKind::m0: return rank_m0(counts, last);
            case ModelKind::m1: return rank_m1(relevance, transitions, taxonomy, last);
            case ModelKind::m2: return rank_m2(relevance, transitions, taxonomy, last, gamma);
            case ModelKind::m3: return rank_m3(relevance, transitions, taxonomy, temporal, last);
        }
        throw UsageError("unknown model");
    }
};

}  // namespace needcast

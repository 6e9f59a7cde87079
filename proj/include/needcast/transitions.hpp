#pragma once

#include "sessions.hpp"

namespace needcast {

/// First-order Markov model over activities at one hierarchy level, fitted by
/// maximum likelihood from adjacent pairs inside sessions.
class TransitionModel {
  public:
    using Counts = std::map<ActivityId, std::map<ActivityId, std::int64_t>>;

    TransitionModel(int level, Counts counts) : m_level(level), m_counts(std::move(counts)) {
        if (level != 1 && level != 2) throw UsageError("transition level must be 1 or 2");
        std::int64_t total = 0;
        std::map<ActivityId, std::int64_t> column;
        for (auto& [from, row] : m_counts) {
            std::erase_if(row, [](const auto& kv) { return kv.second == 0; });
            std::int64_t row_total = 0;
            for (const auto& [to, n] : row) {
                if (n < 0) throw DataError("negative transition count " + from.str() + "->" + to.str());
                row_total += n;
                column[to] += n;
            }
            if (row_total > 0) m_row_totals[from] = row_total;
            total += row_total;
        }
        std::erase_if(m_counts, [](const auto& kv) { return kv.second.empty(); });
        if (total == 0) throw DataError("no transitions to fit");
        for (const auto& [to, n] : column) {
            m_marginal[to] = static_cast<double>(n) / static_cast<double>(total);
        }
        m_total = total;
    }

    [[nodiscard]] int level() const noexcept { return m_level; }
    [[nodiscard]] const Counts& counts() const noexcept { return m_counts; }
    [[nodiscard]] std::int64_t total() const noexcept { return m_total; }

    [[nodiscard]] std::int64_t count(const ActivityId& from, const ActivityId& to) const {
        auto r = m_counts.find(from);
        if (r == m_counts.end()) return 0;
        auto c = r->second.find(to);
        return c == r->second.end() ? 0 : c->second;
    }

    [[nodiscard]] std::int64_t row_total(const ActivityId& from) const {
        auto it = m_row_totals.find(from);
        return it == m_row_totals.end() ? 0 : it->second;
    }

    /// MLE probability P(to | from); zero for unseen sources.
    [[nodiscard]] double probability(const ActivityId& from, const ActivityId& to) const {
        auto total = row_total(from);
        return total == 0 ? 0.0 : static_cast<double>(count(from, to)) / static_cast<double>(total);
    }

    /// Overall next-activity frequency, used as backoff for unseen sources.
    [[nodiscard]] const Distribution<ActivityId>& marginal() const noexcept { return m_marginal; }

  private:
    int m_level;
    Counts m_counts;
    std::map<ActivityId, std::int64_t> m_row_totals;
    Distribution<ActivityId> m_marginal;
    std::int64_t m_total = 0;
};

namespace detail {

/// Session events mapped to the requested level.
inline std::vector<ActivityId> lifted_sequence(const Session& s, const ActivityTaxonomy& taxonomy,
                                               int level) {
    std::vector<ActivityId> seq;
    seq.reserve(s.events.size());
    for (const auto& e : s.events) {
        auto a = taxonomy.at_level(e.activity, level);
        if (!a) {
            throw DataError("activity " + e.activity.str() + " cannot be resolved at level " +
                            std::to_string(level));
        }
        seq.push_back(std::move(*a));
    }
    return seq;
}

}  // namespace detail

inline TransitionModel fit_transitions(const std::vector<Session>& train,
                                       const ActivityTaxonomy& taxonomy, int level) {
    if (train.empty()) throw DataError("empty training set");
    TransitionModel::Counts counts;
    for (const auto& s : train) {
        auto seq = detail::lifted_sequence(s, taxonomy, level);
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) ++counts[seq[i]][seq[i + 1]];
    }
    return TransitionModel{level, std::move(counts)};
}

/// P(. | last): the MLE row when `last` was observed as a source, otherwise the
/// marginal next-activity distribution.
inline Distribution<ActivityId> next_activity_dist(const TransitionModel& model,
                                                   const ActivityTaxonomy& taxonomy,
                                                   const ActivityId& last) {
    if (!taxonomy.contains(last)) throw DataError("unknown activity: " + last.str());
    if (taxonomy.level(last) != model.level()) {
        throw DataError("activity " + last.str() + " is not at level " + std::to_string(model.level()));
    }
    auto total = model.row_total(last);
    if (total == 0) return model.marginal();
    Distribution<ActivityId> out;
    for (const auto& [to, n] : model.counts().at(last)) {
        out[to] = static_cast<double>(n) / static_cast<double>(total);
    }
    return out;
}

/// Fraction of adjacent test pairs whose successor is among the k most
/// probable successors of the source (ties by activity id).
inline double precision_at_k(const TransitionModel& model, const ActivityTaxonomy& taxonomy,
                             const std::vector<Session>& test, std::size_t k) {
    if (k == 0) throw UsageError("precision_at_k: k must be >= 1");
    std::map<ActivityId, std::vector<ActivityId>> top_cache;
    std::size_t hits = 0;
    std::size_t pairs = 0;
    for (const auto& s : test) {
        auto seq = detail::lifted_sequence(s, taxonomy, model.level());
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
            auto it = top_cache.find(seq[i]);
            if (it == top_cache.end()) {
                std::vector<ActivityId> top;
                for (const auto& [a, p] : sorted_by_mass(next_activity_dist(model, taxonomy, seq[i]))) {
                    if (top.size() == k) break;
                    top.push_back(a);
                }
                it = top_cache.emplace(seq[i], std::move(top)).first;
            }
            ++pairs;
            if (std::find(it->second.begin(), it->second.end(), seq[i + 1]) != it->second.end()) ++hits;
        }
    }
    if (pairs == 0) throw DataError("no test transitions");
    return static_cast<double>(hits) / static_cast<double>(pairs);
}

inline void write_transitions(std::ostream& os, const TransitionModel& model) {
    for (const auto& [from, row] : model.counts()) {
        for (const auto& [to, n] : row) {
            write_tsv_row(os, {std::to_string(model.level()), from.str(), to.str(), std::to_string(n),
                               text::fixed(model.probability(from, to), 6)});
        }
    }
}

/// Reads a transitions export back. Probabilities are recomputed from the
/// integer counts, so the printed 6-decimal column is informational only.
inline std::map<int, TransitionModel> load_transitions(const std::string& path) {
    TsvReader in(path);
    std::vector<std::string> f;
    std::map<int, TransitionModel::Counts> by_level;
    while (in.next(f, 5)) {
        auto level = static_cast<int>(text::parse_int(f[0], path, in.line(), "level"));
        if (level != 1 && level != 2) in.fail("level outside {1,2}");
        auto n = text::parse_int(f[3], path, in.line(), "count");
        if (n < 0) in.fail("negative count");
        by_level[level][ActivityId{f[1]}][ActivityId{f[2]}] += n;
    }
    std::map<int, TransitionModel> out;
    for (auto& [level, counts] : by_level) out.emplace(level, TransitionModel{level, std::move(counts)});
    return out;
}

}  // namespace needcast

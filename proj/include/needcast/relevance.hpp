#pragma once

#include <limits>
#include <set>

#include "needs.hpp"

namespace needcast {

enum class Smoothing { off, paper, standard };

inline Smoothing parse_smoothing(std::string_view s) {
    if (s == "off") return Smoothing::off;
    if (s == "paper") return Smoothing::paper;
    if (s == "standard") return Smoothing::standard;
    throw UsageError("smoothing must be one of off|paper|standard, got '" + std::string(s) + "'");
}

/// n(i, a) per activity. Level-1 activities accumulate the counts of their
/// children on top of anything observed for them directly; `beta` is the total
/// over level-2 activities.
class NeedCounts {
  public:
    using Table = std::map<ActivityId, std::map<NeedId, std::int64_t>>;

    NeedCounts(const ActivityTaxonomy& taxonomy, Table observed) : m_observed(std::move(observed)) {
        for (const auto& [a, needs] : m_observed) {
            const auto& act = taxonomy.at(a);
            for (const auto& [i, n] : needs) {
                if (n < 0) throw DataError("negative need count for " + a.str() + "/" + i.str());
                if (n == 0) continue;
                m_counts[a][i] += n;
                m_global[i] += n;
                if (act.level == 2) {
                    m_counts[*act.parent][i] += n;
                    m_beta += n;
                }
            }
        }
        for (const auto& [a, needs] : m_counts) {
            std::int64_t t = 0;
            for (const auto& [i, n] : needs) t += n;
            m_totals[a] = t;
        }
    }

    /// Maps term counts through the lexicon. Terms without a need are an error.
    static NeedCounts from_terms(const ActivityTaxonomy& taxonomy, const TermCounts& terms,
                                 const NeedLexicon& lexicon) {
        Table observed;
        for (const auto& [a, tcounts] : terms) {
            for (const auto& [t, n] : tcounts) {
                auto need = lexicon.need_of(t);
                if (!need) throw DataError("term '" + t + "' is not in the lexicon");
                observed[a][*need] += n;
            }
        }
        return NeedCounts{taxonomy, std::move(observed)};
    }

    [[nodiscard]] std::int64_t count(const ActivityId& a, const NeedId& i) const {
        auto r = m_counts.find(a);
        if (r == m_counts.end()) return 0;
        auto c = r->second.find(i);
        return c == r->second.end() ? 0 : c->second;
    }

    [[nodiscard]] std::int64_t activity_total(const ActivityId& a) const {
        auto it = m_totals.find(a);
        return it == m_totals.end() ? 0 : it->second;
    }

    [[nodiscard]] std::int64_t beta() const noexcept { return m_beta; }
    [[nodiscard]] const Table& counts() const noexcept { return m_counts; }
    [[nodiscard]] const Table& observed() const noexcept { return m_observed; }
    /// Per-need totals over every observation, independent of activity.
    [[nodiscard]] const std::map<NeedId, std::int64_t>& global() const noexcept { return m_global; }

  private:
    Table m_observed;
    Table m_counts;
    std::map<ActivityId, std::int64_t> m_totals;
    std::map<NeedId, std::int64_t> m_global;
    std::int64_t m_beta = 0;
};

inline void write_need_counts(std::ostream& os, const NeedCounts& counts) {
    for (const auto& [a, needs] : counts.observed()) {
        for (const auto& [i, n] : needs) write_tsv_row(os, {a.str(), i.str(), std::to_string(n)});
    }
}

inline NeedCounts load_need_counts(const std::string& path, const ActivityTaxonomy& taxonomy) {
    TsvReader in(path);
    std::vector<std::string> f;
    NeedCounts::Table table;
    while (in.next(f, 3)) {
        ActivityId a{f[0]};
        if (!taxonomy.contains(a)) in.fail("unknown category " + a.str());
        auto n = text::parse_int(f[2], path, in.line(), "count");
        if (n < 0) in.fail("negative count");
        table[a][NeedId{f[1]}] += n;
    }
    return NeedCounts{taxonomy, std::move(table)};
}

/// P(i|a) = n(i,a) / sum_i' n(i',a), zero-count needs omitted.
inline Distribution<NeedId> need_relevance(const NeedCounts& counts, const ActivityId& a) {
    auto total = counts.activity_total(a);
    if (total <= 0) throw DataError("no needs observed for activity " + a.str());
    Distribution<NeedId> out;
    for (const auto& [i, n] : counts.counts().at(a)) {
        out[i] = static_cast<double>(n) / static_cast<double>(total);
    }
    return out;
}

/// Interpolation weight on the level-2 estimate. The `paper` form is
/// beta / (n + beta); `standard` is the usual Dirichlet n / (n + beta).
inline double smoothing_lambda(std::int64_t n_activity, std::int64_t beta, Smoothing mode) {
    const auto n = static_cast<double>(n_activity);
    const auto b = static_cast<double>(beta);
    switch (mode) {
        case Smoothing::paper: return b / (n + b);
        case Smoothing::standard: return n / (n + b);
        case Smoothing::off: return 1.0;
    }
    return 1.0;
}

/// P_H(i|a2) = lambda P(i|a2) + (1 - lambda) P(i|parent(a2)); an unobserved
/// level-2 activity falls back to its parent's distribution.
inline Distribution<NeedId> smoothed_relevance(const NeedCounts& counts, const ActivityId& a_l2,
                                               const ActivityTaxonomy& taxonomy,
                                               Smoothing mode = Smoothing::paper) {
    const auto& act = taxonomy.at(a_l2);
    if (act.level != 2) throw UsageError("smoothed_relevance expects a level-2 activity: " + a_l2.str());
    const auto& parent = *act.parent;
    if (counts.activity_total(parent) <= 0) {
        throw DataError("no needs observed for " + a_l2.str() + " nor its parent " + parent.str());
    }
    auto upper = need_relevance(counts, parent);
    auto n = counts.activity_total(a_l2);
    if (n == 0) return upper;
    auto lower = need_relevance(counts, a_l2);
    if (mode == Smoothing::off) return lower;
    const double lambda = smoothing_lambda(n, counts.beta(), mode);
    Distribution<NeedId> out;
    for (const auto& [i, p] : lower) out[i] += lambda * p;
    for (const auto& [i, p] : upper) out[i] += (1.0 - lambda) * p;
    return out;
}

/// P(i|a) for every activity of one level that has observations (or, when
/// smoothing, an observed parent). Activities without either are absent and
/// behave as empty distributions.
using RelevanceTable = std::map<ActivityId, Distribution<NeedId>>;

inline RelevanceTable relevance_table(const NeedCounts& counts, const ActivityTaxonomy& taxonomy, int level,
                                      Smoothing mode = Smoothing::off) {
    RelevanceTable out;
    for (const auto& a : taxonomy.activities_at(level)) {
        if (level == 2 && mode != Smoothing::off) {
            if (counts.activity_total(*taxonomy.parent(a)) > 0) {
                out[a] = smoothed_relevance(counts, a, taxonomy, mode);
            }
        } else if (counts.activity_total(a) > 0) {
            out[a] = need_relevance(counts, a);
        }
    }
    return out;
}

/// relevance.tsv: level, category, need, probability (6 decimals), sorted by
/// descending probability within each category.
inline void write_relevance(std::ostream& os, const RelevanceTable& table, int level) {
    for (const auto& [a, dist] : table) {
        for (const auto& [i, p] : sorted_by_mass(dist)) {
            write_tsv_row(os, {std::to_string(level), a.str(), i.str(), text::fixed(p, 6)});
        }
    }
}

/// Top-k needs of a distribution, ties by need id.
inline std::vector<NeedId> top_needs(const Distribution<NeedId>& dist, std::size_t k) {
    std::vector<NeedId> out;
    for (const auto& [i, p] : sorted_by_mass(dist)) {
        if (out.size() == k) break;
        out.push_back(i);
    }
    return out;
}

inline constexpr std::size_t kAll = std::numeric_limits<std::size_t>::max();

/// |top-k(predicted) & truth| / |truth|; pass kAll for R@All.
inline double recall_at_k(const std::vector<NeedId>& predicted, const std::set<NeedId>& truth,
                          std::size_t k) {
    if (truth.empty()) throw UsageError("recall_at_k: empty ground truth");
    std::set<NeedId> seen;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < predicted.size() && r < k; ++r) {
        if (truth.count(predicted[r]) && seen.insert(predicted[r]).second) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

/// Jaccard coefficient of the top-k need sets of two activities.
inline double category_jaccard(const Distribution<NeedId>& a, const Distribution<NeedId>& b, std::size_t k) {
    if (a.empty() || b.empty()) throw UsageError("category_jaccard: empty distribution");
    auto ta = top_needs(a, k);
    auto tb = top_needs(b, k);
    std::set<NeedId> sa(ta.begin(), ta.end()), sb(tb.begin(), tb.end());
    std::size_t inter = 0;
    for (const auto& i : sa) inter += sb.count(i);
    const auto uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Pearson correlation coefficient; NaN when either side has zero variance.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw UsageError("pearson: need two equal-length samples (n >= 2)");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace needcast

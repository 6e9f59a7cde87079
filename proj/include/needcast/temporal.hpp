#pragma once

#include <array>
#include <set>

#include "taxonomy.hpp"

namespace needcast {

enum class Period : std::size_t { pre = 0, peri = 1, post = 2 };

/// Probability of a need being relevant before, during and after an activity.
struct Scope {
    std::array<double, 3> p{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

    [[nodiscard]] double operator[](Period t) const { return p[static_cast<std::size_t>(t)]; }
    [[nodiscard]] double pre() const { return p[0]; }
    [[nodiscard]] double peri() const { return p[1]; }
    [[nodiscard]] double post() const { return p[2]; }

    friend bool operator==(const Scope&, const Scope&) = default;
};

inline constexpr Scope kUniformScope{};

struct VoteCounts {
    std::int64_t pre = 0;
    std::int64_t peri = 0;
    std::int64_t post = 0;

    [[nodiscard]] std::int64_t total() const { return pre + peri + post; }
    friend bool operator==(const VoteCounts&, const VoteCounts&) = default;
};

using TemporalVotes = std::map<std::pair<ActivityId, NeedId>, VoteCounts>;

/// temporal_votes.tsv: category, need, pre, peri, post. Rows for the same key
/// accumulate. All-zero or negative rows are rejected.
inline TemporalVotes load_temporal_votes(const std::string& path) {
    TsvReader in(path);
    std::vector<std::string> f;
    TemporalVotes votes;
    while (in.next(f, 5)) {
        VoteCounts v{text::parse_int(f[2], path, in.line(), "pre_votes"),
                     text::parse_int(f[3], path, in.line(), "peri_votes"),
                     text::parse_int(f[4], path, in.line(), "post_votes")};
        if (v.pre < 0 || v.peri < 0 || v.post < 0) in.fail("negative vote count");
        if (v.total() == 0) in.fail("all-zero vote counts");
        auto& acc = votes[{ActivityId{f[0]}, NeedId{f[1]}}];
        acc.pre += v.pre;
        acc.peri += v.peri;
        acc.post += v.post;
    }
    return votes;
}

/// P(t | i, a) per stored pair. Lookups of unknown pairs fall back through the
/// inheritance map (level-2 activity to its parent), then to the uniform scope.
class TemporalModel {
  public:
    TemporalModel() = default;

    explicit TemporalModel(std::map<std::pair<ActivityId, NeedId>, Scope> scopes)
        : m_scopes(std::move(scopes)) {}

    [[nodiscard]] Scope scope(const ActivityId& a, const NeedId& i) const {
        if (auto s = stored(a, i)) return *s;
        auto up = m_inherit.find(a);
        if (up != m_inherit.end()) {
            if (auto s = stored(up->second, i)) return *s;
        }
        return kUniformScope;
    }

    [[nodiscard]] std::optional<Scope> stored(const ActivityId& a, const NeedId& i) const {
        auto it = m_scopes.find({a, i});
        if (it == m_scopes.end()) return std::nullopt;
        return it->second;
    }

    [[nodiscard]] const std::map<std::pair<ActivityId, NeedId>, Scope>& scopes() const noexcept {
        return m_scopes;
    }

    [[nodiscard]] bool inherits() const noexcept { return !m_inherit.empty(); }

  private:
    friend TemporalModel inherit_scope(const TemporalModel& model, const ActivityTaxonomy& taxonomy);

    std::map<std::pair<ActivityId, NeedId>, Scope> m_scopes;
    std::map<ActivityId, ActivityId> m_inherit;
};

inline TemporalModel fit_temporal_scope(const TemporalVotes& votes) {
    std::map<std::pair<ActivityId, NeedId>, Scope> scopes;
    for (const auto& [key, v] : votes) {
        if (v.pre < 0 || v.peri < 0 || v.post < 0) {
            throw DataError("negative votes for " + key.first.str() + "/" + key.second.str());
        }
        const auto total = static_cast<double>(v.total());
        if (total == 0) throw DataError("no votes for " + key.first.str() + "/" + key.second.str());
        scopes[key] = Scope{{static_cast<double>(v.pre) / total, static_cast<double>(v.peri) / total,
                             static_cast<double>(v.post) / total}};
    }
    return TemporalModel{std::move(scopes)};
}

/// Level-2 activities take their parent's scope for pairs they lack.
inline TemporalModel inherit_scope(const TemporalModel& model, const ActivityTaxonomy& taxonomy) {
    TemporalModel out = model;
    for (const auto& a : taxonomy.activities_at(2)) out.m_inherit[a] = *taxonomy.parent(a);
    return out;
}

/// Population variance of the scope triple (its mean is 1/3). Computed from
/// pairwise differences, sum_{s<t} (p_s - p_t)^2 / 9, which needs no rounded
/// 1/3 and so gives 0 and 2/9 exactly at the uniform and point-mass extremes.
inline double temporal_sensitivity(const Scope& s) {
    const auto& p = s.p;
    const double d01 = p[0] - p[1];
    const double d02 = p[0] - p[2];
    const double d12 = p[1] - p[2];
    return (d01 * d01 + d02 * d02 + d12 * d12) / 9.0;
}

inline double temporal_sensitivity(const TemporalModel& model, const NeedId& i, const ActivityId& a) {
    return temporal_sensitivity(model.scope(a, i));
}

/// Mean post-relevance over every (need, activity) pair.
inline double compute_gamma(const TemporalModel& model, const std::set<NeedId>& needs,
                            const std::vector<ActivityId>& activities) {
    if (needs.empty() || activities.empty()) throw UsageError("compute_gamma: empty needs or activities");
    double sum = 0.0;
    for (const auto& i : needs) {
        for (const auto& a : activities) sum += model.scope(a, i).post();
    }
    return sum / (static_cast<double>(needs.size()) * static_cast<double>(activities.size()));
}

inline void write_temporal(std::ostream& os, const TemporalModel& model) {
    for (const auto& [key, s] : model.scopes()) {
        write_tsv_row(os, {key.first.str(), key.second.str(), text::fixed(s.pre(), 6), text::fixed(s.peri(), 6),
                           text::fixed(s.post(), 6), text::fixed(temporal_sensitivity(s), 6)});
    }
}

}  // namespace needcast

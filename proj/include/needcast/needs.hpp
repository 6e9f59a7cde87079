#pragma once

#include <memory>
#include <set>

#include <json.hpp>

#include "taxonomy.hpp"

namespace needcast {

// ---------------------------------------------------------------------------
// Query probing and suggestion collection

struct ProbeQuery {
    VenueId venue;
    std::string query;

    friend bool operator==(const ProbeQuery&, const ProbeQuery&) = default;
};

/// One probe per venue: "<name> <city>", lowercased and whitespace-normalized.
/// Venues lacking a name or a city are skipped with a warning.
inline std::vector<ProbeQuery> probe_queries(const std::vector<Venue>& venues) {
    std::vector<ProbeQuery> out;
    out.reserve(venues.size());
    for (const auto& v : venues) {
        auto name = text::normalize_ws(v.name);
        auto city = text::normalize_ws(v.city);
        if (name.empty() || city.empty()) {
            warn("venue " + v.id.str() + " skipped: missing name or city");
            continue;
        }
        out.push_back({v.id, name + " " + city});
    }
    return out;
}

/// Anything that maps a query to its ranked completion list.
class SuggestionSource {
  public:
    virtual ~SuggestionSource() = default;
    virtual std::vector<std::string> suggest(const std::string& query) = 0;
};

/// Suggestions served from a snapshot file: `query \t suggestion`, one row per
/// suggestion, rank order preserved.
class OfflineFileSource : public SuggestionSource {
  public:
    OfflineFileSource() = default;

    explicit OfflineFileSource(const std::string& path) {
        TsvReader in(path);
        std::vector<std::string> f;
        while (in.next(f, 2)) add(f[0], f[1]);
    }

    void add(const std::string& query, const std::string& suggestion) {
        if (!m_index.count(query)) m_order.push_back(query);
        m_index[query].push_back(suggestion);
    }

    std::vector<std::string> suggest(const std::string& query) override {
        auto it = m_index.find(query);
        return it == m_index.end() ? std::vector<std::string>{} : it->second;
    }

    void save(std::ostream& os) const {
        for (const auto& q : m_order) {
            for (const auto& s : m_index.at(q)) write_tsv_row(os, {q, s});
        }
    }

  private:
    std::vector<std::string> m_order;
    std::map<std::string, std::vector<std::string>> m_index;
};

inline constexpr std::size_t kMaxSuggestions = 10;

/// Completion suffixes for a probe. Only the top `limit` suggestions are
/// considered; those that do not extend the probe at a word boundary are
/// reformulations and are dropped.
inline std::vector<std::string> fetch_suggestions(SuggestionSource& source, const std::string& query,
                                                  std::size_t limit = kMaxSuggestions) {
    auto probe = text::normalize_ws(query);
    auto raw = source.suggest(query);
    if (raw.size() > limit) raw.resize(limit);
    std::vector<std::string> out;
    for (const auto& s : raw) {
        auto norm = text::normalize_ws(s);
        if (norm.size() <= probe.size() + 1 || norm.compare(0, probe.size(), probe) != 0 ||
            norm[probe.size()] != ' ') {
            continue;
        }
        out.push_back(norm.substr(probe.size() + 1));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Suffix cleansing

inline const std::set<std::string>& default_date_stoplist() {
    static const std::set<std::string> words = {
        "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
        "mon", "tue", "tues", "wed", "thu", "thur", "thurs", "fri", "sat", "sun",
        "january", "february", "march", "april", "may", "june", "july", "august",
        "september", "october", "november", "december",
        "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec"};
    return words;
}

/// One term per line; blank lines and '#' comments ignored; lowercased.
inline std::set<std::string> load_word_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto w = text::normalize_ws(line);
        if (!w.empty() && w.front() != '#') out.insert(w);
    }
    return out;
}

inline bool is_number_token(std::string_view tok) {
    bool digit = false;
    for (char c : tok) {
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digit = true;
        } else if (c != '.' && c != ',' && c != ':' && c != '/' && c != '-') {
            return false;
        }
    }
    return digit;
}

/// Removes number tokens, date words and gazetteer entries (single or
/// multi-word), then rejects anything of two characters or fewer.
inline std::optional<std::string> cleanse_suffix(
    std::string_view raw, const std::set<std::string>& gazetteer,
    const std::set<std::string>& stoplist = default_date_stoplist()) {
    auto tokens = text::split_ws(text::to_lower(raw));
    std::vector<bool> drop(tokens.size(), false);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (is_number_token(tokens[i]) || stoplist.count(tokens[i]) || gazetteer.count(tokens[i])) {
            drop[i] = true;
        }
    }
    // multi-word gazetteer entries
    for (const auto& place : gazetteer) {
        auto ptoks = text::split_ws(place);
        if (ptoks.size() < 2 || ptoks.size() > tokens.size()) continue;
        for (std::size_t i = 0; i + ptoks.size() <= tokens.size(); ++i) {
            if (std::equal(ptoks.begin(), ptoks.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
                std::fill_n(drop.begin() + static_cast<std::ptrdiff_t>(i), ptoks.size(), true);
            }
        }
    }
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!drop[i]) kept.push_back(tokens[i]);
    }
    auto out = text::join(kept);
    if (out.size() <= 2) return std::nullopt;
    return out;
}

// ---------------------------------------------------------------------------
// Term aggregation

struct SuggestionRecord {
    VenueId venue;
    ActivityId activity;
    std::string suffix;

    friend bool operator==(const SuggestionRecord&, const SuggestionRecord&) = default;
};

inline void write_suggestions(std::ostream& os, const std::vector<SuggestionRecord>& records) {
    for (const auto& r : records) write_tsv_row(os, {r.venue.str(), r.activity.str(), r.suffix});
}

inline std::vector<SuggestionRecord> load_suggestions(const std::string& path) {
    TsvReader in(path);
    std::vector<std::string> f;
    std::vector<SuggestionRecord> out;
    while (in.next(f, 3)) {
        auto suffix = text::normalize_ws(f[2]);
        if (suffix.empty()) in.fail("empty suffix");
        out.push_back({VenueId{f[0]}, ActivityId{f[1]}, std::move(suffix)});
    }
    return out;
}

/// Term frequencies per activity.
using TermCounts = std::map<ActivityId, std::map<std::string, std::int64_t>>;

inline TermCounts aggregate_terms(const std::vector<SuggestionRecord>& records) {
    TermCounts out;
    for (const auto& r : records) ++out[r.activity][r.suffix];
    return out;
}

inline std::map<std::string, std::int64_t> term_totals(const TermCounts& counts) {
    std::map<std::string, std::int64_t> out;
    for (const auto& [a, terms] : counts) {
        for (const auto& [t, n] : terms) out[t] += n;
    }
    return out;
}

/// Union over activities of each activity's `n` most frequent terms.
inline std::set<std::string> top_terms(const TermCounts& counts, std::size_t n) {
    std::set<std::string> out;
    for (const auto& [a, terms] : counts) {
        std::vector<std::pair<std::string, std::int64_t>> v(terms.begin(), terms.end());
        std::stable_sort(v.begin(), v.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
        for (std::size_t i = 0; i < v.size() && i < n; ++i) out.insert(v[i].first);
    }
    return out;
}

inline void write_term_counts(std::ostream& os, const TermCounts& counts) {
    for (const auto& [a, terms] : counts) {
        for (const auto& [t, n] : terms) write_tsv_row(os, {a.str(), t, std::to_string(n)});
    }
}

inline TermCounts load_term_counts(const std::string& path) {
    TsvReader in(path);
    std::vector<std::string> f;
    TermCounts out;
    while (in.next(f, 3)) {
        auto n = text::parse_int(f[2], path, in.line(), "count");
        if (n < 0) in.fail("negative count");
        out[ActivityId{f[0]}][f[1]] += n;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synonym graph and clustering

struct AssessorGrouping {
    std::string assessor;
    std::vector<std::vector<std::string>> groups;
};

/// synonyms_input.jsonl: {"assessor": id, "groups": [[term, ...], ...]}
inline std::vector<AssessorGrouping> load_assessor_groupings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<AssessorGrouping> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            AssessorGrouping g;
            const auto& who = j.at("assessor");
            g.assessor = who.is_string() ? who.get<std::string>() : who.dump();
            for (const auto& group : j.at("groups")) {
                std::vector<std::string> terms;
                for (const auto& t : group) terms.push_back(text::normalize_ws(t.get<std::string>()));
                g.groups.push_back(std::move(terms));
            }
            out.push_back(std::move(g));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path, lineno, e.what());
        }
    }
    return out;
}

/// Undirected weighted graph over terms. Edge weight counts how many
/// assessors placed both endpoints in the same group.
class SynonymGraph {
  public:
    void add_node(const std::string& term) { m_adj[term]; }

    void add_weight(const std::string& u, const std::string& v, std::int64_t w) {
        if (u == v) throw DataError("self-edge on term '" + u + "'");
        m_adj[u][v] += w;
        m_adj[v][u] += w;
    }

    [[nodiscard]] std::int64_t weight(const std::string& u, const std::string& v) const {
        auto it = m_adj.find(u);
        if (it == m_adj.end()) return 0;
        auto e = it->second.find(v);
        return e == it->second.end() ? 0 : e->second;
    }

    [[nodiscard]] const std::map<std::string, std::map<std::string, std::int64_t>>& adjacency() const noexcept {
        return m_adj;
    }

    [[nodiscard]] std::size_t node_count() const noexcept { return m_adj.size(); }

    [[nodiscard]] std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& [u, nbrs] : m_adj) n += nbrs.size();
        return n / 2;
    }

  private:
    std::map<std::string, std::map<std::string, std::int64_t>> m_adj;
};

inline SynonymGraph build_synonym_graph(const std::vector<AssessorGrouping>& assessors) {
    SynonymGraph g;
    for (const auto& a : assessors) {
        std::set<std::string> seen;
        for (const auto& group : a.groups) {
            std::set<std::string> members(group.begin(), group.end());
            for (const auto& t : members) {
                if (!seen.insert(t).second) {
                    throw DataError("assessor " + a.assessor + " places term '" + t +
                                    "' in more than one group");
                }
                g.add_node(t);
            }
            for (auto u = members.begin(); u != members.end(); ++u) {
                for (auto v = std::next(u); v != members.end(); ++v) g.add_weight(*u, *v, 1);
            }
        }
    }
    return g;
}

struct ClusterParams {
    double density_min = 0.5;
    double cp_min = 0.5;
};

/// Density-periphery greedy clustering. Seeds at the node with the highest
/// weighted degree among the remaining nodes, then grows the cluster with the
/// neighbor most strongly tied to it while both the grown cluster's weighted
/// density and the neighbor's cluster property stay above their thresholds.
/// Clustered nodes are removed and the procedure repeats until no node is left.
///
/// density(C) = 2 * sum of internal weights / (|C| (|C| - 1)), taken as 1 for a
/// single node; cp(n, C) = w(n, C) / (density(C) |C|).
inline std::vector<std::set<std::string>> cluster_synonyms(const SynonymGraph& graph,
                                                           ClusterParams params = {}) {
    if (!(params.density_min > 0.0 && params.density_min <= 1.0) ||
        !(params.cp_min > 0.0 && params.cp_min <= 1.0)) {
        throw UsageError("density_min and cp_min must lie in (0, 1]");
    }
    const auto& adj = graph.adjacency();
    std::set<std::string> remaining;
    for (const auto& [t, nbrs] : adj) remaining.insert(t);

    std::vector<std::set<std::string>> clusters;
    while (!remaining.empty()) {
        std::string seed;
        std::int64_t best_degree = -1;
        for (const auto& t : remaining) {
            std::int64_t d = 0;
            for (const auto& [v, w] : adj.at(t)) {
                if (remaining.count(v)) d += w;
            }
            if (d > best_degree) {
                best_degree = d;
                seed = t;
            }
        }

        std::set<std::string> cluster{seed};
        std::int64_t internal = 0;
        for (;;) {
            // w(n, C) for every remaining neighbor of the cluster
            std::map<std::string, std::int64_t> ties;
            for (const auto& m : cluster) {
                for (const auto& [v, w] : adj.at(m)) {
                    if (remaining.count(v) && !cluster.count(v)) ties[v] += w;
                }
            }
            if (ties.empty()) break;
            // cp shares its denominator across candidates, so the argmax is the
            // strongest tie; map order gives the term tie-break
            auto best = ties.begin();
            for (auto it = ties.begin(); it != ties.end(); ++it) {
                if (it->second > best->second) best = it;
            }
            const double size = static_cast<double>(cluster.size());
            const double density =
                cluster.size() < 2 ? 1.0 : 2.0 * static_cast<double>(internal) / (size * (size - 1.0));
            const double cp = static_cast<double>(best->second) / (density * size);
            const double grown_density =
                2.0 * static_cast<double>(internal + best->second) / ((size + 1.0) * size);
            if (grown_density < params.density_min || cp < params.cp_min) break;
            internal += best->second;
            cluster.insert(best->first);
        }
        for (const auto& m : cluster) remaining.erase(m);
        clusters.push_back(std::move(cluster));
    }
    return clusters;
}

// ---------------------------------------------------------------------------
// Lexicon

struct InformationNeed {
    std::string label;
    std::set<std::string> synonyms;

    friend bool operator==(const InformationNeed&, const InformationNeed&) = default;
};

/// Canonical needs with disjoint synonym sets and a term-to-need index. A
/// need's id is its canonical term and always belongs to its synonym set.
class NeedLexicon {
  public:
    void add(const NeedId& id, std::string label, std::set<std::string> synonyms) {
        if (m_needs.count(id)) throw DataError("duplicate need id " + id.str());
        synonyms.insert(id.str());
        for (const auto& t : synonyms) {
            auto [it, inserted] = m_term_to_need.emplace(t, id);
            if (!inserted) {
                throw DataError("term '" + t + "' belongs to needs " + it->second.str() + " and " + id.str());
            }
        }
        m_needs.emplace(id, InformationNeed{std::move(label), std::move(synonyms)});
    }

    [[nodiscard]] std::optional<NeedId> need_of(const std::string& term) const {
        auto it = m_term_to_need.find(term);
        if (it == m_term_to_need.end()) return std::nullopt;
        return it->second;
    }

    [[nodiscard]] const std::string& label(const NeedId& id) const {
        auto it = m_needs.find(id);
        if (it == m_needs.end()) throw DataError("unknown need " + id.str());
        return it->second.label;
    }

    void relabel(const NeedId& id, std::string label) {
        auto it = m_needs.find(id);
        if (it == m_needs.end()) throw DataError("label override for unknown need " + id.str());
        it->second.label = std::move(label);
    }

    [[nodiscard]] const std::map<NeedId, InformationNeed>& needs() const noexcept { return m_needs; }
    [[nodiscard]] const std::map<std::string, NeedId>& term_index() const noexcept { return m_term_to_need; }
    [[nodiscard]] std::size_t size() const noexcept { return m_needs.size(); }

  private:
    std::map<NeedId, InformationNeed> m_needs;
    std::map<std::string, NeedId> m_term_to_need;
};

/// Turns clusters into needs labelled (and identified) by their most frequent
/// term; ties go to the alphabetically first term.
inline NeedLexicon canonicalize(const std::vector<std::set<std::string>>& clusters,
                                const std::map<std::string, std::int64_t>& term_counts) {
    NeedLexicon lex;
    for (const auto& cluster : clusters) {
        if (cluster.empty()) continue;
        const std::string* best = nullptr;
        std::int64_t best_count = -1;
        for (const auto& t : cluster) {
            auto it = term_counts.find(t);
            auto n = it == term_counts.end() ? 0 : it->second;
            if (n > best_count) {
                best_count = n;
                best = &t;
            }
        }
        lex.add(NeedId{*best}, *best, cluster);
    }
    return lex;
}

struct LexiconOptions {
    ClusterParams cluster;
    std::size_t top_terms = 100;
};

/// Full normalization: the top terms of each activity plus every assessed term
/// are clustered on the synonym graph; all other terms become singleton needs.
inline NeedLexicon build_lexicon(const TermCounts& counts, const std::vector<AssessorGrouping>& assessors,
                                 const LexiconOptions& options = {}) {
    auto graph = build_synonym_graph(assessors);
    for (const auto& t : top_terms(counts, options.top_terms)) graph.add_node(t);
    auto clusters = cluster_synonyms(graph, options.cluster);
    auto totals = term_totals(counts);
    std::set<std::string> clustered;
    for (const auto& c : clusters) clustered.insert(c.begin(), c.end());
    for (const auto& [t, n] : totals) {
        if (!clustered.count(t)) clusters.push_back({t});
    }
    return canonicalize(clusters, totals);
}

/// lexicon.json: {"needs": [{"id", "label", "synonyms": [...]}]}
inline nlohmann::ordered_json lexicon_to_json(const NeedLexicon& lex) {
    nlohmann::ordered_json j;
    auto& arr = j["needs"] = nlohmann::ordered_json::array();
    for (const auto& [id, need] : lex.needs()) {
        nlohmann::ordered_json n;
        n["id"] = id.str();
        n["label"] = need.label;
        n["synonyms"] = std::vector<std::string>(need.synonyms.begin(), need.synonyms.end());
        arr.push_back(std::move(n));
    }
    return j;
}

inline NeedLexicon load_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    NeedLexicon lex;
    try {
        auto j = nlohmann::json::parse(in);
        for (const auto& n : j.at("needs")) {
            auto syn = n.at("synonyms").get<std::vector<std::string>>();
            lex.add(NeedId{n.at("id").get<std::string>()}, n.at("label").get<std::string>(),
                    std::set<std::string>(syn.begin(), syn.end()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return lex;
}

/// Label override file: `need_id \t label`.
inline void apply_label_overrides(NeedLexicon& lex, const std::string& path) {
    TsvReader in(path);
    std::vector<std::string> f;
    while (in.next(f, 2)) {
        if (f[1].empty()) in.fail("empty label");
        lex.relabel(NeedId{f[0]}, f[1]);
    }
}

// ---------------------------------------------------------------------------
// Agreement

/// Fleiss' kappa over all unordered pairs of the shared term universe, each
/// pair rated "same group" or "different" by every assessor.
inline double fleiss_kappa(const std::vector<AssessorGrouping>& assessors) {
    if (assessors.size() < 2) throw UsageError("fleiss_kappa needs at least 2 assessors");
    std::set<std::string> universe;
    for (const auto& a : assessors) {
        for (const auto& g : a.groups) universe.insert(g.begin(), g.end());
    }
    const double terms = static_cast<double>(universe.size());
    const double items = terms * (terms - 1.0) / 2.0;
    if (items < 1.0) throw UsageError("fleiss_kappa needs at least 2 terms");
    const double raters = static_cast<double>(assessors.size());

    // Only co-grouped pairs carry "same" votes; every other pair is unanimous "different".
    std::map<std::pair<std::string, std::string>, int> same_votes;
    for (const auto& a : assessors) {
        for (const auto& g : a.groups) {
            std::set<std::string> members(g.begin(), g.end());
            for (auto u = members.begin(); u != members.end(); ++u) {
                for (auto v = std::next(u); v != members.end(); ++v) ++same_votes[{*u, *v}];
            }
        }
    }
    const double unanimous_different = items - static_cast<double>(same_votes.size());
    double agreement_sum = unanimous_different;  // P_i = 1 for those pairs
    double same_total = 0.0;
    for (const auto& [pair, s] : same_votes) {
        const double same = s;
        const double diff = raters - same;
        agreement_sum += (same * same + diff * diff - raters) / (raters * (raters - 1.0));
        same_total += same;
    }
    const double p_bar = agreement_sum / items;
    const double p_same = same_total / (items * raters);
    const double p_e = p_same * p_same + (1.0 - p_same) * (1.0 - p_same);
    if (p_e >= 1.0) return 1.0;
    return (p_bar - p_e) / (1.0 - p_e);
}

}  // namespace needcast

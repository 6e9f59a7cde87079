#pragma once

#include <set>
#include <tuple>

#include <boost/math/special_functions/beta.hpp>

#include "anticipate.hpp"

namespace needcast {

using Transition = std::pair<ActivityId, ActivityId>;

/// Graded usefulness (0..4) of a need during a transition between two activities.
class JudgmentSet {
  public:
    void set(const ActivityId& from, const ActivityId& to, const NeedId& need, int grade) {
        if (grade < 0 || grade > 4) throw DataError("grade outside [0,4]: " + std::to_string(grade));
        if (!m_grades[{from, to}].emplace(need, grade).second) {
            throw DataError("duplicate judgment " + from.str() + "->" + to.str() + " / " + need.str());
        }
    }

    /// Grades for one transition; empty when nothing was judged.
    [[nodiscard]] const std::map<NeedId, int>& grades(const ActivityId& from, const ActivityId& to) const {
        static const std::map<NeedId, int> none;
        auto it = m_grades.find({from, to});
        return it == m_grades.end() ? none : it->second;
    }

    [[nodiscard]] std::size_t size() const {
        std::size_t n = 0;
        for (const auto& [t, g] : m_grades) n += g.size();
        return n;
    }

  private:
    std::map<Transition, std::map<NeedId, int>> m_grades;
};

/// judgments.tsv: from_category, to_category, need_id, grade (0..4).
inline JudgmentSet load_judgments(const std::string& path) {
    TsvReader in(path);
    std::vector<std::string> f;
    JudgmentSet out;
    while (in.next(f, 4)) {
        auto grade = text::parse_int(f[3], path, in.line(), "grade");
        if (grade < 0 || grade > 4) in.fail("grade outside [0,4]");
        try {
            out.set(ActivityId{f[0]}, ActivityId{f[1]}, NeedId{f[2]}, static_cast<int>(grade));
        } catch (const DataError& e) {
            in.fail(e.what());
        }
    }
    return out;
}

/// NDCG@k with gain 2^g - 1 and log2(rank + 1) discount. Unjudged needs have
/// grade 0; the ideal ordering uses the judged grades only. Zero when no
/// judged need has a positive grade.
inline double ndcg_at_k(const std::vector<NeedId>& ranking, const std::map<NeedId, int>& grades, std::size_t k) {
    if (k == 0) throw UsageError("ndcg_at_k: k must be >= 1");
    if (ranking.empty()) throw UsageError("ndcg_at_k: empty ranking");
    auto gain = [](int g) { return std::exp2(static_cast<double>(g)) - 1.0; };
    auto discount = [](std::size_t rank) { return std::log2(static_cast<double>(rank) + 1.0); };

    double dcg = 0.0;
    for (std::size_t r = 0; r < ranking.size() && r < k; ++r) {
        auto it = grades.find(ranking[r]);
        if (it != grades.end()) dcg += gain(it->second) / discount(r + 1);
    }
    std::vector<int> ideal;
    ideal.reserve(grades.size());
    for (const auto& [i, g] : grades) ideal.push_back(g);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t r = 0; r < ideal.size() && r < k; ++r) idcg += gain(ideal[r]) / discount(r + 1);
    return idcg == 0.0 ? 0.0 : dcg / idcg;
}

/// Union of the top-n needs of both activities of a transition.
inline std::set<NeedId> candidate_needs(const RelevanceTable& relevance, const ActivityId& from,
                                        const ActivityId& to, std::size_t n = 10) {
    auto a = relevance.find(from);
    auto b = relevance.find(to);
    if (a == relevance.end() || a->second.empty()) throw DataError("no needs for activity " + from.str());
    if (b == relevance.end() || b->second.empty()) throw DataError("no needs for activity " + to.str());
    std::set<NeedId> out;
    for (auto& i : top_needs(a->second, n)) out.insert(std::move(i));
    for (auto& i : top_needs(b->second, n)) out.insert(std::move(i));
    return out;
}

/// Distinct transitions of the test sessions ordered by frequency (ties by
/// (from, to)), truncated to m. At level 1 every pair of level-1 activities is
/// returned regardless of m, still ordered by observed frequency.
inline std::vector<Transition> most_frequent_transitions(const std::vector<Session>& test,
                                                         const ActivityTaxonomy& taxonomy, std::size_t m,
                                                         int level) {
    if (m == 0) throw UsageError("most_frequent_transitions: m must be >= 1");
    std::map<Transition, std::int64_t> counts;
    for (const auto& s : test) {
        auto seq = detail::lifted_sequence(s, taxonomy, level);
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) ++counts[{seq[i], seq[i + 1]}];
    }
    if (level == 1) {
        auto top = taxonomy.activities_at(1);
        for (const auto& a : top) {
            for (const auto& b : top) counts[{a, b}];
        }
    }
    if (counts.empty()) throw DataError("no transitions in the test sessions");
    std::vector<std::pair<Transition, std::int64_t>> v(counts.begin(), counts.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
    std::vector<Transition> out;
    for (const auto& [t, n] : v) {
        if (level == 2 && out.size() == m) break;
        out.push_back(t);
    }
    return out;
}

/// Model order restricted to the candidate set; candidates the model did not
/// score are appended in need id order.
inline std::vector<NeedId> restrict_to(const NeedRanking& ranking, const std::set<NeedId>& candidates) {
    std::vector<NeedId> out;
    std::set<NeedId> placed;
    for (const auto& e : ranking.entries) {
        if (candidates.count(e.need) && placed.insert(e.need).second) out.push_back(e.need);
    }
    for (const auto& i : candidates) {
        if (!placed.count(i)) out.push_back(i);
    }
    return out;
}

/// Two-tailed p-value of the paired t-test. Returns 1 when every difference is
/// zero and 0 (with a warning) when the differences are a nonzero constant.
inline double paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw UsageError("paired_t_test: length mismatch");
    if (a.size() < 2) throw UsageError("paired_t_test: need at least 2 pairs");
    const double n = static_cast<double>(a.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
    mean /= n;
    double ss = 0.0;
    bool all_zero = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) all_zero = false;
        ss += (d - mean) * (d - mean);
    }
    if (all_zero) return 1.0;
    if (ss == 0.0) {
        warn("paired_t_test: constant nonzero differences, p-value reported as 0");
        return 0.0;
    }
    const double dof = n - 1.0;
    const double t = mean / std::sqrt(ss / dof / n);
    // P(|T| > |t|) = I_{dof / (dof + t^2)}(dof / 2, 1 / 2)
    return boost::math::ibeta(dof / 2.0, 0.5, dof / (dof + t * t));
}

struct EvalRow {
    std::string model;
    std::size_t k = 0;
    Transition transition;
    double ndcg = 0.0;
};

struct EvalReport {
    std::vector<std::string> models;
    std::vector<std::size_t> ks;
    std::vector<Transition> transitions;
    std::vector<EvalRow> rows;
    std::map<std::pair<std::string, std::size_t>, double> means;
    /// (k, model a, model b) -> two-tailed paired t-test p-value
    std::map<std::tuple<std::size_t, std::string, std::string>, double> p_values;

    [[nodiscard]] std::vector<double> scores(const std::string& model, std::size_t k) const {
        std::vector<double> out;
        for (const auto& r : rows) {
            if (r.model == model && r.k == k) out.push_back(r.ndcg);
        }
        return out;
    }
};

using RankFn = std::function<NeedRanking(const ActivityId&)>;

/// Transition-sampled evaluation: for every sampled transition the model ranks
/// from the source activity, the ranking is cut to the transition's candidate
/// needs and scored against the judgments at each cutoff.
inline EvalReport run_eval(const std::vector<std::pair<std::string, RankFn>>& models,
                           const std::vector<Transition>& sample, const JudgmentSet& judgments,
                           const RelevanceTable& relevance, const std::vector<std::size_t>& ks,
                           std::size_t candidates_per_side = 10) {
    if (sample.empty()) throw DataError("empty transition sample");
    if (models.empty()) throw UsageError("run_eval: no models");
    if (ks.empty()) throw UsageError("run_eval: no cutoffs");
    EvalReport report;
    report.ks = ks;
    report.transitions = sample;
    for (const auto& [name, fn] : models) report.models.push_back(name);

    for (const auto& t : sample) {
        auto candidates = candidate_needs(relevance, t.first, t.second, candidates_per_side);
        const auto& judged = judgments.grades(t.first, t.second);
        std::map<NeedId, int> grades;
        std::size_t missing = 0;
        for (const auto& i : candidates) {
            auto it = judged.find(i);
            if (it == judged.end()) {
                ++missing;
                grades[i] = 0;
            } else {
                grades[i] = it->second;
            }
        }
        if (missing) {
            warn("transition " + t.first.str() + "->" + t.second.str() + ": " + std::to_string(missing) +
                 " candidate needs unjudged, graded 0");
        }
        for (const auto& [name, fn] : models) {
            auto order = restrict_to(fn(t.first), candidates);
            for (auto k : ks) report.rows.push_back({name, k, t, ndcg_at_k(order, grades, k)});
        }
    }
    for (const auto& name : report.models) {
        for (auto k : ks) {
            auto s = report.scores(name, k);
            double sum = 0.0;
            for (double v : s) sum += v;
            report.means[{name, k}] = sum / static_cast<double>(s.size());
        }
    }
    if (sample.size() >= 2) {
        for (auto k : ks) {
            for (std::size_t x = 0; x < report.models.size(); ++x) {
                for (std::size_t y = x + 1; y < report.models.size(); ++y) {
                    const auto& ma = report.models[x];
                    const auto& mb = report.models[y];
                    report.p_values[{k, ma, mb}] = paired_t_test(report.scores(ma, k), report.scores(mb, k));
                }
            }
        }
    }
    return report;
}

/// results.tsv: one row per (model, k, transition) followed by a '#'-prefixed
/// summary block of means and pairwise p-values.
inline void write_results(std::ostream& os, const EvalReport& report) {
    write_tsv_row(os, {"model", "k", "transition_from", "transition_to", "ndcg"});
    for (const auto& r : report.rows) {
        write_tsv_row(os, {r.model, std::to_string(r.k), r.transition.first.str(), r.transition.second.str(),
                           text::fixed(r.ndcg, 6)});
    }
    os << "# summary\n";
    os << "# model\tk\tmean_ndcg\ttransitions\n";
    for (const auto& name : report.models) {
        for (auto k : report.ks) {
            os << "# " << name << '\t' << k << '\t' << text::fixed(report.means.at({name, k}), 4) << '\t'
               << report.transitions.size() << '\n';
        }
    }
    os << "# p_values\n";
    os << "# k\tmodel_a\tmodel_b\tp_value\n";
    for (const auto& [key, p] : report.p_values) {
        const auto& [k, a, b] = key;
        os << "# " << k << '\t' << a << '\t' << b << '\t' << text::fixed(p, 4) << '\n';
    }
}

}  // namespace needcast

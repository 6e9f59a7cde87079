#include <gtest/gtest.h>

#include "needcast/evaluate.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace needcast;

namespace {

std::vector<NeedId> ids(std::initializer_list<const char*> names) {
    std::vector<NeedId> out;
    for (auto n : names) out.emplace_back(n);
    return out;
}

std::map<NeedId, int> grades(std::initializer_list<std::pair<const char*, int>> kv) {
    std::map<NeedId, int> out;
    for (const auto& [k, g] : kv) out[NeedId{k}] = g;
    return out;
}

Session seq(std::initializer_list<const char*> acts) {
    Session s{UserId{"u"}, {}};
    int m = 0;
    for (auto a : acts) s.events.push_back({needcast::testing::at_minutes(m++), VenueId{"v"}, ActivityId{a}});
    return s;
}

}  // namespace

TEST(Ndcg, Examples) {
    auto g = grades({{"a", 0}, {"b", 3}});
    EXPECT_NEAR(ndcg_at_k(ids({"a", "b"}), g, 2), 1.0 / std::log2(3.0), 1e-12);
    EXPECT_NEAR(ndcg_at_k(ids({"a", "b"}), g, 2), 0.6309, 1e-4);
    EXPECT_DOUBLE_EQ(ndcg_at_k(ids({"b", "a"}), g, 2), 1.0);
    EXPECT_DOUBLE_EQ(ndcg_at_k(ids({"a", "b"}), grades({{"a", 0}, {"b", 0}}), 2), 0.0);
    EXPECT_THROW(ndcg_at_k({}, g, 2), UsageError);
    EXPECT_THROW(ndcg_at_k(ids({"a"}), g, 0), UsageError);
    // unjudged needs contribute nothing; ideal comes from judged grades
    EXPECT_NEAR(ndcg_at_k(ids({"x", "b"}), grades({{"b", 1}}), 2), 1.0 / std::log2(3.0), 1e-12);
}

TEST(Ndcg, IdealOrderAndEqualGradePermutations) {
    std::mt19937 rng(50);
    for (int trial = 0; trial < 100; ++trial) {
        std::map<NeedId, int> g;
        std::vector<std::pair<int, NeedId>> items;
        const int n = 2 + rng() % 12;
        for (int i = 0; i < n; ++i) {
            NeedId id{"n" + std::to_string(i)};
            g[id] = rng() % 5;
            items.push_back({g[id], id});
        }
        std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
        std::vector<NeedId> ideal;
        for (const auto& [gr, id] : items) ideal.push_back(id);
        // shuffle inside each equal-grade block
        auto shuffled = ideal;
        for (std::size_t start = 0; start < items.size();) {
            std::size_t end = start;
            while (end < items.size() && items[end].first == items[start].first) ++end;
            std::shuffle(shuffled.begin() + static_cast<std::ptrdiff_t>(start),
                         shuffled.begin() + static_cast<std::ptrdiff_t>(end), rng);
            start = end;
        }
        bool any_positive = items.front().first > 0;
        for (std::size_t k : {1u, 3u, 5u, 20u}) {
            EXPECT_DOUBLE_EQ(ndcg_at_k(ideal, g, k), any_positive ? 1.0 : 0.0);
            EXPECT_DOUBLE_EQ(ndcg_at_k(shuffled, g, k), ndcg_at_k(ideal, g, k));
            // an arbitrary permutation stays within [0, 1]
            auto perm = ideal;
            std::shuffle(perm.begin(), perm.end(), rng);
            double v = ndcg_at_k(perm, g, k);
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0 + 1e-12);
        }
    }
}

TEST(Candidates, UnionOfTopLists) {
    RelevanceTable rel;
    for (int i = 0; i < 12; ++i) {
        rel[ActivityId{"A"}][NeedId{"a" + std::to_string(i)}] = 1.0 / (i + 1);
        rel[ActivityId{"B"}][NeedId{"b" + std::to_string(i)}] = 1.0 / (i + 1);
        rel[ActivityId{"C"}][NeedId{"a" + std::to_string(i)}] = 1.0 / (i + 2);
    }
    EXPECT_EQ(candidate_needs(rel, ActivityId{"A"}, ActivityId{"B"}).size(), 20u);
    EXPECT_EQ(candidate_needs(rel, ActivityId{"A"}, ActivityId{"C"}).size(), 10u);
    EXPECT_EQ(candidate_needs(rel, ActivityId{"A"}, ActivityId{"A"}, 3).size(), 3u);
    EXPECT_THROW(candidate_needs(rel, ActivityId{"A"}, ActivityId{"Z"}), DataError);
}

TEST(Transitions, MostFrequentMatchesTallySort) {
    std::mt19937 rng(51);
    std::map<ActivityId, Activity> acts;
    for (int t = 0; t < 9; ++t) {
        ActivityId top{"T" + std::to_string(t)};
        acts[top] = {"top", 1, std::nullopt};
        acts[ActivityId{"T" + std::to_string(t) + "s"}] = {"sub", 2, top};
    }
    ActivityTaxonomy tax{acts};
    auto l2 = tax.activities_at(2);
    std::vector<Session> test;
    std::map<Transition, long> tally;
    for (int s = 0; s < 40; ++s) {
        Session sess{UserId{"u"}, {}};
        int len = 1 + rng() % 5;
        for (int e = 0; e < len; ++e) {
            sess.events.push_back({needcast::testing::at_minutes(e), VenueId{"v"}, l2[rng() % 4]});
        }
        for (std::size_t i = 0; i + 1 < sess.events.size(); ++i) ++tally[{sess.events[i].activity, sess.events[i + 1].activity}];
        test.push_back(sess);
    }
    std::vector<std::pair<long, Transition>> want;
    for (const auto& [t, n] : tally) want.push_back({-n, t});
    std::sort(want.begin(), want.end());

    auto top5 = most_frequent_transitions(test, tax, 5, 2);
    ASSERT_EQ(top5.size(), std::min<std::size_t>(5, want.size()));
    for (std::size_t i = 0; i < top5.size(); ++i) EXPECT_EQ(top5[i], want[i].second);
    EXPECT_EQ(most_frequent_transitions(test, tax, 1000, 2).size(), want.size());

    auto all = most_frequent_transitions(test, tax, 5, 1);
    EXPECT_EQ(all.size(), 81u);
    EXPECT_THROW(most_frequent_transitions({seq({"T0s"})}, tax, 5, 2), DataError);
}

TEST(Restrict, AppendsUnscoredCandidatesInIdOrder) {
    NeedRanking r{ActivityId{"A"}, ModelKind::m1, {{NeedId{"z"}, 0.5}, {NeedId{"q"}, 0.3}, {NeedId{"b"}, 0.2}}};
    EXPECT_EQ(restrict_to(r, {NeedId{"b"}, NeedId{"z"}, NeedId{"c"}, NeedId{"a"}}), ids({"z", "b", "a", "c"}));
}

TEST(TTest, DegenerateCases) {
    std::vector<double> a{0.1, 0.5, 0.3};
    EXPECT_EQ(paired_t_test(a, a), 1.0);
    std::vector<std::string> warnings;
    auto saved = warning_sink();
    warning_sink() = [&](std::string_view w) { warnings.emplace_back(w); };
    EXPECT_EQ(paired_t_test({2, 2, 2, 2}, {1, 1, 1, 1}), 0.0);
    warning_sink() = saved;
    EXPECT_EQ(warnings.size(), 1u);
    EXPECT_THROW(paired_t_test({1}, {2}), UsageError);
    EXPECT_THROW(paired_t_test({1, 2}, {2}), UsageError);
}

TEST(TTest, MatchesNumericalIntegrationAndIsSymmetric) {
    std::mt19937 rng(52);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 3 + rng() % 30;
        std::vector<double> a(n), b(n);
        const double shift = 0.3 * (trial % 5);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = noise(rng) + shift;
            b[i] = noise(rng);
        }
        double p = paired_t_test(a, b);
        double want = oracle::t_two_tailed(oracle::paired_t(a, b), static_cast<double>(n - 1));
        EXPECT_NEAR(p, want, 1e-9) << "n=" << n;
        EXPECT_NEAR(paired_t_test(b, a), p, 1e-15);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
    }
}

TEST(RunEval, PerfectModelAndSingleTransition) {
    RelevanceTable rel{{ActivityId{"A"}, {{NeedId{"x"}, 0.6}, {NeedId{"y"}, 0.4}}},
                       {ActivityId{"B"}, {{NeedId{"y"}, 0.7}, {NeedId{"z"}, 0.3}}}};
    JudgmentSet j;
    j.set(ActivityId{"A"}, ActivityId{"B"}, NeedId{"x"}, 1);
    j.set(ActivityId{"A"}, ActivityId{"B"}, NeedId{"y"}, 4);
    j.set(ActivityId{"A"}, ActivityId{"B"}, NeedId{"z"}, 2);
    j.set(ActivityId{"B"}, ActivityId{"A"}, NeedId{"x"}, 3);
    j.set(ActivityId{"B"}, ActivityId{"A"}, NeedId{"y"}, 0);
    j.set(ActivityId{"B"}, ActivityId{"A"}, NeedId{"z"}, 1);

    auto oracle_model = [&](const ActivityId& from) {
        const auto& g = j.grades(from, from == ActivityId{"A"} ? ActivityId{"B"} : ActivityId{"A"});
        Distribution<NeedId> s;
        for (const auto& [i, gr] : g) s[i] = gr;
        return make_ranking(from, ModelKind::m1, s);
    };
    auto flat = [&](const ActivityId& from) {
        return make_ranking(from, ModelKind::m0, {{NeedId{"x"}, 0.1}, {NeedId{"y"}, 0.1}, {NeedId{"z"}, 0.1}});
    };
    std::vector<Transition> sample{{ActivityId{"A"}, ActivityId{"B"}}, {ActivityId{"B"}, ActivityId{"A"}}};
    auto report = run_eval({{"perfect", oracle_model}, {"flat", flat}}, sample, j, rel, {3, 5});
    EXPECT_DOUBLE_EQ(report.means.at({"perfect", 3}), 1.0);
    EXPECT_DOUBLE_EQ(report.means.at({"perfect", 5}), 1.0);
    EXPECT_LT(report.means.at({"flat", 3}), 1.0);
    EXPECT_EQ(report.rows.size(), 2u * 2u * 2u);
    EXPECT_TRUE(report.p_values.count({3, "perfect", "flat"}));

    auto single = run_eval({{"flat", flat}}, {sample[0]}, j, rel, {3});
    auto order = restrict_to(flat(ActivityId{"A"}), candidate_needs(rel, ActivityId{"A"}, ActivityId{"B"}));
    EXPECT_DOUBLE_EQ(single.means.at({"flat", 3}), ndcg_at_k(order, j.grades(sample[0].first, sample[0].second), 3));
    EXPECT_TRUE(single.p_values.empty());

    EXPECT_THROW(run_eval({{"flat", flat}}, {}, j, rel, {3}), DataError);

    std::ostringstream os;
    write_results(os, report);
    const auto text = os.str();
    EXPECT_EQ(text.rfind("model\tk\ttransition_from\ttransition_to\tndcg\n", 0), 0u);
    EXPECT_NE(text.find("# perfect\t3\t1.0000\t2\n"), std::string::npos) << text;
    EXPECT_NE(text.find("# p_values\n"), std::string::npos);
}

TEST(RunEval, MissingJudgmentsGradeZeroWithWarning) {
    RelevanceTable rel{{ActivityId{"A"}, {{NeedId{"x"}, 1.0}}}, {ActivityId{"B"}, {{NeedId{"y"}, 1.0}}}};
    JudgmentSet j;
    j.set(ActivityId{"A"}, ActivityId{"B"}, NeedId{"y"}, 2);
    std::vector<std::string> warnings;
    auto saved = warning_sink();
    warning_sink() = [&](std::string_view w) { warnings.emplace_back(w); };
    auto m = [](const ActivityId& from) { return make_ranking(from, ModelKind::m0, {{NeedId{"x"}, 0.9}}); };
    auto report = run_eval({{"m", m}}, {{ActivityId{"A"}, ActivityId{"B"}}}, j, rel, {3});
    warning_sink() = saved;
    EXPECT_EQ(warnings.size(), 1u);
    EXPECT_NEAR(report.means.at({"m", 3}), 1.0 / std::log2(3.0), 1e-12);
}

TEST(Judgments, LoadAndValidate) {
    needcast::testing::TempDir dir;
    auto j = load_judgments(dir.file("j.tsv", "A\tB\tx\t3\nA\tB\ty\t0\n"));
    EXPECT_EQ(j.size(), 2u);
    EXPECT_EQ(j.grades(ActivityId{"A"}, ActivityId{"B"}).at(NeedId{"x"}), 3);
    EXPECT_TRUE(j.grades(ActivityId{"B"}, ActivityId{"A"}).empty());
    EXPECT_THROW(load_judgments(dir.file("g.tsv", "A\tB\tx\t5\n")), DataError);
    EXPECT_THROW(load_judgments(dir.file("d.tsv", "A\tB\tx\t1\nA\tB\tx\t2\n")), DataError);
}

#pragma once

// Brute-force reference computations used by the tests. Nothing here calls
// into the library's algorithms; inputs are plain containers.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace needcast::oracle {

/// n(a -> b) over adjacent pairs of every sequence.
inline std::map<std::pair<std::string, std::string>, long> pair_counts(
    const std::vector<std::vector<std::string>>& sequences) {
    std::map<std::pair<std::string, std::string>, long> out;
    for (const auto& s : sequences) {
        for (std::size_t i = 1; i < s.size(); ++i) out[{s[i - 1], s[i]}] += 1;
    }
    return out;
}

struct Event {
    std::string user;
    std::string venue;
    long seconds;
};

/// Keeps an event unless an earlier kept event of the same user and venue lies
/// within `window` seconds. Events must be given in chronological order.
inline std::vector<Event> dedup(const std::vector<Event>& chronological, long window) {
    std::vector<Event> kept;
    for (const auto& e : chronological) {
        bool dup = false;
        for (const auto& k : kept) {
            if (k.user == e.user && k.venue == e.venue && e.seconds - k.seconds <= window) dup = true;
        }
        if (!dup) kept.push_back(e);
    }
    return kept;
}

/// Sessions as lists of times per user: a boundary wherever the gap to the
/// previous event exceeds `gap`. Times per user must be sorted.
inline std::vector<std::pair<std::string, std::vector<long>>> gap_scan(
    const std::map<std::string, std::vector<long>>& times_by_user, long gap) {
    std::vector<std::pair<std::string, std::vector<long>>> out;
    for (const auto& [user, times] : times_by_user) {
        std::vector<std::size_t> starts{0};
        for (std::size_t i = 1; i < times.size(); ++i) {
            if (times[i] - times[i - 1] > gap) starts.push_back(i);
        }
        starts.push_back(times.size());
        for (std::size_t s = 0; s + 1 < starts.size(); ++s) {
            if (starts[s] == starts[s + 1]) continue;
            out.push_back({user, std::vector<long>(times.begin() + starts[s], times.begin() + starts[s + 1])});
        }
    }
    return out;
}

/// Fleiss' kappa from the full item-by-category table (rows: items, cols: categories).
inline double fleiss(const std::vector<std::vector<int>>& table) {
    const double items = table.size();
    const double raters = [&] {
        int s = 0;
        for (int v : table.front()) s += v;
        return static_cast<double>(s);
    }();
    const std::size_t cats = table.front().size();
    std::vector<double> pj(cats, 0.0);
    double pbar = 0.0;
    for (const auto& row : table) {
        double sq = 0.0;
        for (std::size_t j = 0; j < cats; ++j) {
            sq += row[j] * row[j];
            pj[j] += row[j];
        }
        pbar += (sq - raters) / (raters * (raters - 1.0));
    }
    pbar /= items;
    double pe = 0.0;
    for (auto& p : pj) {
        p /= items * raters;
        pe += p * p;
    }
    if (pe == 1.0) return 1.0;
    return (pbar - pe) / (1.0 - pe);
}

/// Two-tailed Student-t tail probability by composite Simpson integration of
/// the density over [0, |t|].
inline double t_two_tailed(double t, double dof, int intervals = 200000) {
    const double c = std::exp(std::lgamma((dof + 1) / 2) - std::lgamma(dof / 2)) / std::sqrt(dof * M_PI);
    auto f = [&](double x) { return c * std::pow(1 + x * x / dof, -(dof + 1) / 2); };
    const double b = std::fabs(t);
    const double h = b / intervals;
    double s = f(0) + f(b);
    for (int i = 1; i < intervals; ++i) s += f(i * h) * (i % 2 ? 4 : 2);
    const double half_mass = s * h / 3;
    return 1.0 - 2.0 * half_mass;
}

/// Plain paired t statistic.
inline double paired_t(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = a.size();
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m += a[i] - b[i];
    m /= n;
    double v = 0;
    for (std::size_t i = 0; i < a.size(); ++i) v += (a[i] - b[i] - m) * (a[i] - b[i] - m);
    v /= n - 1;
    return m / std::sqrt(v / n);
}

/// Dense world for model checks: activities 0..A-1, needs 0..I-1.
struct World {
    std::vector<std::vector<double>> rel;    // rel[a][i] = P(i|a)
    std::vector<std::vector<double>> trans;  // trans[a][b] = P(b|a)
    std::vector<std::vector<double>> pre;    // pre[a][i]
    std::vector<std::vector<double>> post;   // post[a][i]
};

inline std::vector<double> m1(const World& w, std::size_t last) {
    std::vector<double> s(w.rel.front().size(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t n = 0; n < w.rel.size(); ++n) s[i] += w.rel[n][i] * w.trans[last][n];
    }
    return s;
}

inline std::vector<double> m2(const World& w, std::size_t last, double gamma) {
    auto ahead = m1(w, last);
    std::vector<double> s(ahead.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = gamma * w.rel[last][i] + (1 - gamma) * ahead[i];
    return s;
}

inline std::vector<double> m3(const World& w, std::size_t last) {
    std::vector<double> s(w.rel.front().size(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = w.post[last][i] * w.rel[last][i];
        for (std::size_t n = 0; n < w.rel.size(); ++n) s[i] += w.pre[n][i] * w.rel[n][i] * w.trans[last][n];
    }
    return s;
}

/// Indices sorted by descending score, ties by index.
inline std::vector<std::size_t> argsort_desc(const std::vector<double>& s) {
    std::vector<std::size_t> idx(s.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    return idx;
}

}  // namespace needcast::oracle

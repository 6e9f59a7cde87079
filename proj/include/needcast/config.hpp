#pragma once

#include <filesystem>
#include <set>

#include "relevance.hpp"

namespace needcast {

/// Pipeline settings. Loaded from a flat `key = value` file; command-line flags
/// override individual keys. Relative paths resolve against the config file's
/// directory.
struct PipelineConfig {
    // inputs
    std::string taxonomy;
    std::string venues;
    std::string checkins;
    std::string suggestions_snapshot;
    std::string suggestions_url;
    std::string synonyms;
    std::string votes;
    std::string judgments;
    std::string gazetteer;
    std::string stoplist;
    std::string label_overrides;
    // outputs
    std::string workdir = ".";

    std::set<std::string> countries;
    double max_gap_hours = 6.0;
    double dedup_window_minutes = 10.0;
    double train_fraction = 0.8;
    std::size_t top_venues = 200;
    std::size_t dashboard_k = 3;
    std::vector<std::size_t> ndcg_ks{3, 5};
    Smoothing smoothing = Smoothing::off;
    std::optional<double> gamma;  // empty = derive from temporal votes
    double density_min = 0.5;
    double cp_min = 0.5;
    std::size_t top_terms = 100;
    double rate_limit = 0.0;
    int retries = 3;
    int eval_level = 2;
    std::size_t eval_transitions = 100;
    std::size_t candidates_per_side = 10;

    [[nodiscard]] std::string out(const std::string& name) const {
        return (std::filesystem::path(workdir) / name).string();
    }

    /// Applies one key. Throws UsageError for unknown keys or bad values.
    void set(const std::string& key, const std::string& value, const std::filesystem::path& base = {}) {
        auto path = [&]() {
            if (value.empty()) return value;
            std::filesystem::path p(value);
            return (p.is_absolute() || base.empty() ? p : base / p).lexically_normal().string();
        };
        auto number = [&]() {
            std::size_t pos = 0;
            double v = 0;
            try {
                v = std::stod(value, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (value.empty() || pos != value.size()) {
                throw UsageError("config key '" + key + "': not a number: '" + value + "'");
            }
            return v;
        };
        auto count = [&]() {
            double v = number();
            if (v < 1 || v != std::floor(v)) throw UsageError("config key '" + key + "' must be a positive integer");
            return static_cast<std::size_t>(v);
        };

        if (key == "taxonomy") taxonomy = path();
        else if (key == "venues") venues = path();
        else if (key == "checkins") checkins = path();
        else if (key == "suggestions_snapshot") suggestions_snapshot = path();
        else if (key == "suggestions_url") suggestions_url = value;
        else if (key == "synonyms") synonyms = path();
        else if (key == "votes") votes = path();
        else if (key == "judgments") judgments = path();
        else if (key == "gazetteer") gazetteer = path();
        else if (key == "stoplist") stoplist = path();
        else if (key == "label_overrides") label_overrides = path();
        else if (key == "workdir") workdir = path();
        else if (key == "countries") {
            countries.clear();
            std::string cur;
            for (char c : value + ",") {
                if (c == ',') {
                    auto t = text::normalize_ws(cur);
                    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return std::toupper(ch); });
                    if (!t.empty()) countries.insert(t);
                    cur.clear();
                } else {
                    cur += c;
                }
            }
        } else if (key == "max_gap_hours") max_gap_hours = number();
        else if (key == "dedup_window_minutes") dedup_window_minutes = number();
        else if (key == "train_fraction") train_fraction = number();
        else if (key == "top_venues") top_venues = count();
        else if (key == "dashboard_k") dashboard_k = count();
        else if (key == "ndcg_ks") {
            ndcg_ks.clear();
            std::string cur;
            for (char c : value + ",") {
                if (c == ',') {
                    if (!text::normalize_ws(cur).empty()) {
                        PipelineConfig tmp;
                        tmp.set("dashboard_k", text::normalize_ws(cur));
                        ndcg_ks.push_back(tmp.dashboard_k);
                    }
                    cur.clear();
                } else {
                    cur += c;
                }
            }
            if (ndcg_ks.empty()) throw UsageError("ndcg_ks must list at least one cutoff");
        } else if (key == "smoothing") smoothing = parse_smoothing(value);
        else if (key == "gamma") {
            if (value == "auto") gamma.reset();
            else gamma = number();
        } else if (key == "density_min") density_min = number();
        else if (key == "cp_min") cp_min = number();
        else if (key == "top_terms") top_terms = count();
        else if (key == "rate_limit") rate_limit = number();
        else if (key == "retries") retries = static_cast<int>(number());
        else if (key == "eval_level") eval_level = static_cast<int>(number());
        else if (key == "eval_transitions") eval_transitions = count();
        else if (key == "candidates_per_side") candidates_per_side = count();
        else throw UsageError("unknown config key '" + key + "'");
    }

    void validate() const {
        if (!(max_gap_hours > 0)) throw UsageError("max_gap_hours must be positive");
        if (!(dedup_window_minutes > 0)) throw UsageError("dedup_window_minutes must be positive");
        if (!(train_fraction > 0 && train_fraction < 1)) throw UsageError("train_fraction must lie in (0,1)");
        if (gamma && !(*gamma >= 0 && *gamma <= 1)) throw UsageError("gamma must lie in [0,1]");
        if (!(density_min > 0 && density_min <= 1)) throw UsageError("density_min must lie in (0,1]");
        if (!(cp_min > 0 && cp_min <= 1)) throw UsageError("cp_min must lie in (0,1]");
        if (rate_limit < 0) throw UsageError("rate_limit must be non-negative");
        if (retries < 0) throw UsageError("retries must be non-negative");
        if (eval_level != 1 && eval_level != 2) throw UsageError("eval_level must be 1 or 2");
    }

    /// Reads `key = value` lines; '#' starts a comment line.
    static PipelineConfig load(const std::string& file) {
        std::ifstream in(file);
        if (!in) throw DataError("cannot open config file: " + file);
        PipelineConfig cfg;
        auto base = std::filesystem::path(file).parent_path();
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto trimmed = text::join(text::split_ws(line));
            if (trimmed.empty() || trimmed.front() == '#') continue;
            auto eq = line.find('=');
            if (eq == std::string::npos) throw DataError(file, lineno, "expected key = value");
            auto key = text::join(text::split_ws(line.substr(0, eq)));
            auto value = text::join(text::split_ws(line.substr(eq + 1)));
            try {
                cfg.set(key, value, base);
            } catch (const UsageError& e) {
                throw DataError(file, lineno, e.what());
            }
        }
        return cfg;
    }
};

}  // namespace needcast

// needcast: command-line driver for the information-need anticipation pipeline.
//
//   ingest | sessions | fit-transitions | build-needs | normalize-needs |
//   fit-temporal | rank | evaluate
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 internal error.

#include <cstdlib>

#include <CLI11.hpp>

#include "needcast/http_source.hpp"
#include "needcast/needcast.hpp"

namespace fs = std::filesystem;
using namespace needcast;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

int fail(std::string_view kind, const std::string& what, int code) {
    std::cerr << "needcast: " << kind << " error: " << one_line(what) << '\n';
    return code;
}

void require_input(const std::string& path, std::string_view key) {
    if (path.empty()) throw UsageError("missing required setting '" + std::string(key) + "'");
    if (!fs::exists(path)) throw DataError("missing input file: " + path);
}

void require_artifact(const PipelineConfig& cfg, const std::string& name) {
    auto p = cfg.out(name);
    if (!fs::exists(p)) throw DataError("missing prerequisite artifact: " + p);
}

template <typename Fn>
void write_file(const std::string& path, Fn&& fn) {
    auto out = open_output(path);
    fn(out);
    if (!out) throw DataError("write failed: " + path);
}

// ---------------------------------------------------------------------------

void cmd_ingest(const PipelineConfig& cfg) {
    require_input(cfg.taxonomy, "taxonomy");
    require_input(cfg.venues, "venues");
    require_input(cfg.checkins, "checkins");
    auto taxonomy = load_taxonomy(cfg.taxonomy);
    auto venues = load_venues(cfg.venues, taxonomy, cfg.countries);
    auto log = load_checkins(cfg.checkins);
    auto raw = log.size();
    auto dropped = join_checkins(log, venues);
    std::stable_sort(log.begin(), log.end(), chronological);
    auto top = top_venues_per_category(taxonomy, venues, log, cfg.top_venues);

    fs::create_directories(cfg.workdir);
    write_file(cfg.out("venues.tsv"), [&](std::ostream& os) { write_venues(os, venues); });
    write_file(cfg.out("checkins.tsv"), [&](std::ostream& os) { write_checkins(os, log); });
    write_file(cfg.out("top_venues.tsv"), [&](std::ostream& os) {
        for (const auto& [a, list] : top) {
            for (std::size_t r = 0; r < list.size(); ++r) {
                write_tsv_row(os, {a.str(), std::to_string(r + 1), list[r].venue.str(),
                                   std::to_string(list[r].checkins)});
            }
        }
    });
    std::cout << "activities_level1\t" << taxonomy.activities_at(1).size() << '\n'
              << "activities_level2\t" << taxonomy.activities_at(2).size() << '\n'
              << "venues\t" << venues.size() << '\n'
              << "checkins\t" << log.size() << '\n'
              << "checkins_unresolved\t" << dropped << " of " << raw << '\n';
}

void cmd_sessions(const PipelineConfig& cfg) {
    require_input(cfg.taxonomy, "taxonomy");
    require_artifact(cfg, "venues.tsv");
    require_artifact(cfg, "checkins.tsv");
    auto taxonomy = load_taxonomy(cfg.taxonomy);
    auto venues = load_venues(cfg.out("venues.tsv"), taxonomy);
    auto log = load_checkins(cfg.out("checkins.tsv"));
    if (log.empty()) throw DataError("no check-ins");
    auto input = log.size();

    using std::chrono::seconds;
    auto dedup = dedup_checkins(std::move(log), seconds(static_cast<std::int64_t>(cfg.dedup_window_minutes * 60)));
    auto sessions = extract_sessions(dedup.log, venues, seconds(static_cast<std::int64_t>(cfg.max_gap_hours * 3600)));
    auto split = chronological_split(sessions, cfg.train_fraction);

    write_file(cfg.out("sessions.jsonl"), [&](std::ostream& os) { write_sessions(os, sessions); });
    write_file(cfg.out("sessions.train.jsonl"), [&](std::ostream& os) { write_sessions(os, split.train); });
    write_file(cfg.out("sessions.test.jsonl"), [&](std::ostream& os) { write_sessions(os, split.test); });
    std::cout << "checkins\t" << input << '\n'
              << "duplicates_removed\t" << dedup.removed << '\n'
              << "duplicate_fraction\t" << text::fixed(dedup.removed_fraction(input), 4) << '\n'
              << "sessions\t" << sessions.size() << '\n'
              << "train_sessions\t" << split.train.size() << '\n'
              << "test_sessions\t" << split.test.size() << '\n';
}

void cmd_fit_transitions(const PipelineConfig& cfg, std::size_t precision_k) {
    require_input(cfg.taxonomy, "taxonomy");
    require_artifact(cfg, "sessions.train.jsonl");
    auto taxonomy = load_taxonomy(cfg.taxonomy);
    auto train = load_sessions(cfg.out("sessions.train.jsonl"));
    auto level1 = fit_transitions(train, taxonomy, 1);
    auto level2 = fit_transitions(train, taxonomy, 2);
    write_file(cfg.out("transitions.tsv"), [&](std::ostream& os) {
        write_transitions(os, level1);
        write_transitions(os, level2);
    });
    std::cout << "transitions_level1\t" << level1.total() << '\n'
              << "transitions_level2\t" << level2.total() << '\n';
    if (fs::exists(cfg.out("sessions.test.jsonl"))) {
        auto test = load_sessions(cfg.out("sessions.test.jsonl"));
        for (const auto* model : {&level1, &level2}) {
            try {
                std::cout << "precision_at_" << precision_k << "_level" << model->level() << '\t'
                          << text::fixed(precision_at_k(*model, taxonomy, test, precision_k), 4) << '\n';
            } catch (const DataError& e) {
                warn(std::string("precision not computed: ") + e.what());
            }
        }
    }
}

void cmd_build_needs(const PipelineConfig& cfg) {
    require_input(cfg.taxonomy, "taxonomy");
    require_artifact(cfg, "venues.tsv");
    require_artifact(cfg, "top_venues.tsv");
    auto taxonomy = load_taxonomy(cfg.taxonomy);
    auto venues = load_venues(cfg.out("venues.tsv"), taxonomy);

    std::vector<Venue> sampled;
    {
        TsvReader in(cfg.out("top_venues.tsv"));
        std::vector<std::string> f;
        while (in.next(f, 4)) {
            auto it = venues.find(VenueId{f[2]});
            if (it == venues.end()) in.fail("unknown venue " + f[2]);
            sampled.push_back(it->second);
        }
    }

    std::unique_ptr<SuggestionSource> source;
    if (!cfg.suggestions_snapshot.empty()) {
        require_input(cfg.suggestions_snapshot, "suggestions_snapshot");
        source = std::make_unique<OfflineFileSource>(cfg.suggestions_snapshot);
    } else if (!cfg.suggestions_url.empty()) {
        HttpSourceOptions opts;
        opts.base_url = cfg.suggestions_url;
        opts.retries = cfg.retries;
        opts.rate_limit_qps = cfg.rate_limit;
        source = std::make_unique<HttpSuggestionSource>(opts);
    } else {
        throw UsageError("either suggestions_snapshot or suggestions_url must be set");
    }

    std::set<std::string> gazetteer;
    if (!cfg.gazetteer.empty()) {
        require_input(cfg.gazetteer, "gazetteer");
        gazetteer = load_word_list(cfg.gazetteer);
    }
    auto stoplist = default_date_stoplist();
    if (!cfg.stoplist.empty()) {
        require_input(cfg.stoplist, "stoplist");
        stoplist = load_word_list(cfg.stoplist);
    }

    std::vector<SuggestionRecord> records;
    std::size_t queries = 0, answered = 0, raw_suffixes = 0;
    for (const auto& probe : probe_queries(sampled)) {
        ++queries;
        auto suffixes = fetch_suggestions(*source, probe.query);
        if (!suffixes.empty()) ++answered;
        raw_suffixes += suffixes.size();
        const auto& activity = venues.at(probe.venue).activity;
        for (const auto& s : suffixes) {
            if (auto term = cleanse_suffix(s, gazetteer, stoplist)) records.push_back({probe.venue, activity, *term});
        }
    }
    auto counts = aggregate_terms(records);

    write_file(cfg.out("suggestions.tsv"), [&](std::ostream& os) { write_suggestions(os, records); });
    write_file(cfg.out("term_counts.tsv"), [&](std::ostream& os) { write_term_counts(os, counts); });
    write_file(cfg.out("category_summary.tsv"), [&](std::ostream& os) {
        std::map<ActivityId, std::pair<std::int64_t, std::set<std::string>>> by_top;
        for (const auto& a : taxonomy.activities_at(1)) by_top[a];
        for (const auto& r : records) {
            auto top = *taxonomy.at_level(r.activity, 1);
            by_top[top].first += 1;
            by_top[top].second.insert(r.suffix);
        }
        write_tsv_row(os, {"category", "name", "suggestions", "distinct_terms"});
        for (const auto& [a, v] : by_top) {
            write_tsv_row(os, {a.str(), taxonomy.at(a).name, std::to_string(v.first), std::to_string(v.second.size())});
        }
    });
    std::cout << "queries\t" << queries << '\n'
              << "queries_with_suggestions\t" << answered << '\n'
              << "suffixes\t" << raw_suffixes << '\n'
              << "records_after_cleansing\t" << records.size() << '\n'
              << "distinct_terms\t" << term_totals(counts).size() << '\n';
}

void cmd_normalize_needs(const PipelineConfig& cfg) {
    require_input(cfg.taxonomy, "taxonomy");
    require_artifact(cfg, "term_counts.tsv");
    auto taxonomy = load_taxonomy(cfg.taxonomy);
    auto terms = load_term_counts(cfg.out("term_counts.tsv"));
    std::vector<AssessorGrouping> assessors;
    if (!cfg.synonyms.empty()) {
        require_input(cfg.synonyms, "synonyms");
        assessors = load_assessor_groupings(cfg.synonyms);
    }
    LexiconOptions opts;
    opts.cluster = {cfg.density_min, cfg.cp_min};
    opts.top_terms = cfg.top_terms;
    auto lexicon = build_lexicon(terms, assessors, opts);
    if (!cfg.label_overrides.empty()) {
        require_input(cfg.label_overrides, "label_overrides");
        apply_label_overrides(lexicon, cfg.label_overrides);
    }
    auto counts = NeedCounts::from_terms(taxonomy, terms, lexicon);

    write_file(cfg.out("lexicon.json"), [&](std::ostream& os) { os << lexicon_to_json(lexicon).dump(2) << '\n'; });
    write_file(cfg.out("need_counts.tsv"), [&](std::ostream& os) { write_need_counts(os, counts); });
    write_file(cfg.out("relevance.tsv"), [&](std::ostream& os) {
        write_relevance(os, relevance_table(counts, taxonomy, 1), 1);
        write_relevance(os, relevance_table(counts, taxonomy, 2, cfg.smoothing), 2);
    });
    std::cout << "terms\t" << term_totals(terms).size() << '\n'
              << "needs\t" << lexicon.size() << '\n'
              << "assessors\t" << assessors.size() << '\n';
    if (assessors.size() >= 2) std::cout << "fleiss_kappa\t" << text::fixed(fleiss_kappa(assessors), 4) << '\n';
}

TemporalModel load_temporal(const PipelineConfig& cfg) {
    if (cfg.votes.empty()) {
        warn("no temporal votes configured; every scope is uniform");
        return {};
    }
    require_input(cfg.votes, "votes");
    return fit_temporal_scope(load_temporal_votes(cfg.votes));
}

double resolve_gamma(const PipelineConfig& cfg, const TemporalModel& temporal, const ActivityTaxonomy& taxonomy,
                     const NeedLexicon& lexicon) {
    if (cfg.gamma) return *cfg.gamma;
    std::set<NeedId> needs;
    for (const auto& [id, n] : lexicon.needs()) needs.insert(id);
    return compute_gamma(temporal, needs, taxonomy.activities_at(1));
}

void cmd_fit_temporal(const PipelineConfig& cfg) {
    require_input(cfg.taxonomy, "taxonomy");
    require_input(cfg.votes, "votes");
    auto taxonomy = load_taxonomy(cfg.taxonomy);
    auto model = fit_temporal_scope(load_temporal_votes(cfg.votes));
    write_file(cfg.out("temporal.tsv"), [&](std::ostream& os) { write_temporal(os, model); });
    std::cout << "scoped_pairs\t" << model.scopes().size() << '\n';
    if (fs::exists(cfg.out("lexicon.json"))) {
        auto lexicon = load_lexicon(cfg.out("lexicon.json"));
        std::cout << "gamma\t" << text::fixed(resolve_gamma(cfg, model, taxonomy, lexicon), 6) << '\n';
    }
}

/// Everything `rank` and `evaluate` need, loaded from the work directory.
struct FittedWorld {
    ActivityTaxonomy taxonomy;
    NeedLexicon lexicon;
    std::optional<NeedCounts> counts;
    std::map<int, TransitionModel> transitions;
    TemporalModel temporal;
    double gamma = 0.0;

    static FittedWorld load(const PipelineConfig& cfg) {
        require_input(cfg.taxonomy, "taxonomy");
        for (auto name : {"transitions.tsv", "need_counts.tsv", "lexicon.json"}) require_artifact(cfg, name);
        FittedWorld w;
        w.taxonomy = load_taxonomy(cfg.taxonomy);
        w.lexicon = load_lexicon(cfg.out("lexicon.json"));
        w.counts = load_need_counts(cfg.out("need_counts.tsv"), w.taxonomy);
        w.transitions = load_transitions(cfg.out("transitions.tsv"));
        auto raw = load_temporal(cfg);
        w.gamma = resolve_gamma(cfg, raw, w.taxonomy, w.lexicon);
        w.temporal = inherit_scope(raw, w.taxonomy);
        return w;
    }

    [[nodiscard]] const TransitionModel& transitions_at(int level) const {
        auto it = transitions.find(level);
        if (it == transitions.end()) throw DataError("no level-" + std::to_string(level) + " transitions fitted");
        return it->second;
    }

    [[nodiscard]] RelevanceTable relevance_at(int level, Smoothing smoothing) const {
        return relevance_table(*counts, taxonomy, level, smoothing);
    }
};

void cmd_rank(const PipelineConfig& cfg, const std::string& last, const std::string& model_name, std::size_t k,
              bool normalize) {
    if (last.empty()) throw UsageError("--last-activity is required");
    auto model = parse_model(model_name);
    auto world = FittedWorld::load(cfg);
    ActivityId activity{last};
    if (!world.taxonomy.contains(activity)) throw DataError("unknown activity: " + last);
    int level = world.taxonomy.level(activity);
    auto relevance = world.relevance_at(level, cfg.smoothing);
    Anticipator engine{world.taxonomy, *world.counts, relevance, world.transitions_at(level), world.temporal,
                       world.gamma};
    auto ranking = engine.rank(model, activity);
    if (normalize) ranking = normalized(std::move(ranking));

    nlohmann::ordered_json j;
    j["last_activity"] = last;
    j["model"] = to_string(model);
    j["k"] = k;
    auto& cards = j["cards"] = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < ranking.entries.size() && r < k; ++r) {
        const auto& e = ranking.entries[r];
        auto label = world.lexicon.needs().count(e.need) ? world.lexicon.label(e.need) : e.need.str();
        cards.push_back({{"need", e.need.str()}, {"label", label}, {"score", e.score}});
    }
    std::cout << j.dump() << '\n';
}

void cmd_evaluate(const PipelineConfig& cfg, const std::string& models_arg) {
    require_input(cfg.judgments, "judgments");
    require_artifact(cfg, "sessions.test.jsonl");
    auto world = FittedWorld::load(cfg);
    auto test = load_sessions(cfg.out("sessions.test.jsonl"));
    auto judgments = load_judgments(cfg.judgments);
    const int level = cfg.eval_level;
    auto relevance = world.relevance_at(level, cfg.smoothing);
    Anticipator engine{world.taxonomy, *world.counts, relevance, world.transitions_at(level), world.temporal,
                       world.gamma};

    std::vector<std::pair<std::string, RankFn>> models;
    std::set<std::string> seen;
    std::string cur;
    for (char c : models_arg + ",") {
        if (c != ',') {
            cur += c;
            continue;
        }
        auto name = text::normalize_ws(cur);
        cur.clear();
        if (name.empty() || !seen.insert(name).second) continue;
        auto kind = parse_model(name);
        models.emplace_back(to_string(kind), [&engine, kind](const ActivityId& a) { return engine.rank(kind, a); });
    }
    if (models.empty()) throw UsageError("--models lists no model");

    auto sample = most_frequent_transitions(test, world.taxonomy, cfg.eval_transitions, level);
    auto report = run_eval(models, sample, judgments, relevance, cfg.ndcg_ks, cfg.candidates_per_side);
    write_file(cfg.out("results.tsv"), [&](std::ostream& os) { write_results(os, report); });

    std::cout << "level\t" << level << '\n' << "transitions\t" << sample.size() << '\n'
              << "gamma\t" << text::fixed(world.gamma, 6) << '\n';
    for (const auto& name : report.models) {
        for (auto k : report.ks) {
            std::cout << "ndcg@" << k << '\t' << name << '\t' << text::fixed(report.means.at({name, k}), 4) << '\n';
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"needcast: anticipate information needs from check-in activity"};
    app.require_subcommand(1);

    std::string config_path;
    std::map<std::string, std::string> overrides;
    app.add_option("-c,--config", config_path, "config file (key = value); falls back to $NEEDCAST_CONFIG");

    auto add_override = [&](CLI::App* cmd, const std::string& flag, const std::string& key, const std::string& help) {
        cmd->add_option_function<std::string>(
            flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, help);
    };
    auto add_common = [&](CLI::App* cmd) {
        add_override(cmd, "--workdir", "workdir", "directory for pipeline artifacts");
        add_override(cmd, "--taxonomy", "taxonomy", "taxonomy.tsv");
        cmd->add_option_function<std::vector<std::string>>(
            "--set",
            [&overrides](const std::vector<std::string>& kvs) {
                for (const auto& kv : kvs) {
                    auto eq = kv.find('=');
                    if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value");
                    overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
                }
            },
            "override any config key (key=value)");
    };

    auto* ingest = app.add_subcommand("ingest", "validate inputs, filter by country, sample top venues");
    add_common(ingest);
    add_override(ingest, "--countries", "countries", "comma-separated ISO country codes to keep");
    add_override(ingest, "--top-venues", "top_venues", "venues sampled per category");

    auto* sessions = app.add_subcommand("sessions", "deduplicate check-ins, extract sessions, split train/test");
    add_common(sessions);
    add_override(sessions, "--max-gap-hours", "max_gap_hours", "maximum in-session gap");
    add_override(sessions, "--dedup-window-minutes", "dedup_window_minutes", "duplicate check-in window");
    add_override(sessions, "--train-fraction", "train_fraction", "chronological training fraction");

    auto* fit_trans = app.add_subcommand("fit-transitions", "fit activity transition models");
    add_common(fit_trans);
    std::size_t precision_k = 5;
    fit_trans->add_option("--precision-k", precision_k, "cutoff for next-activity precision")->check(CLI::PositiveNumber);

    auto* build = app.add_subcommand("build-needs", "probe suggestions and aggregate cleansed terms");
    add_common(build);
    add_override(build, "--gazetteer", "gazetteer", "place names removed from suffixes");
    add_override(build, "--rate-limit", "rate_limit", "remote requests per second");
    add_override(build, "--snapshot", "suggestions_snapshot", "offline suggestion snapshot");
    add_override(build, "--url", "suggestions_url", "remote completion endpoint");

    auto* normalize = app.add_subcommand("normalize-needs", "cluster synonyms into the need lexicon");
    add_common(normalize);
    add_override(normalize, "--density-min", "density_min", "minimum cluster density");
    add_override(normalize, "--cp-min", "cp_min", "minimum cluster property");
    add_override(normalize, "--top-terms", "top_terms", "terms per category to cluster");
    add_override(normalize, "--smoothing", "smoothing", "off|paper|standard for the relevance export");

    auto* temporal = app.add_subcommand("fit-temporal", "fit temporal scopes from vote counts");
    add_common(temporal);

    auto* rank = app.add_subcommand("rank", "print the dashboard for a last activity");
    add_common(rank);
    std::string last_activity, model_name = "m2";
    std::optional<std::size_t> k_flag;
    bool normalize_scores = false;
    rank->add_option("--last-activity", last_activity, "activity the user just performed")->required();
    rank->add_option("--model", model_name, "m0|m1|m2|m3");
    rank->add_option("--k", k_flag, "number of cards")->check(CLI::PositiveNumber);
    rank->add_flag("--normalized", normalize_scores, "report sum-normalized scores");
    add_override(rank, "--smoothing", "smoothing", "off|paper|standard");
    add_override(rank, "--gamma", "gamma", "auto or a value in [0,1]");

    auto* evaluate = app.add_subcommand("evaluate", "NDCG evaluation on sampled test transitions");
    add_common(evaluate);
    std::string models_arg = "m0,m1,m2,m3";
    evaluate->add_option("--models", models_arg, "comma-separated models");
    add_override(evaluate, "--level", "eval_level", "hierarchy level (1 or 2)");
    add_override(evaluate, "--smoothing", "smoothing", "off|paper|standard");
    add_override(evaluate, "--gamma", "gamma", "auto or a value in [0,1]");
    add_override(evaluate, "--ks", "ndcg_ks", "comma-separated NDCG cutoffs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail("usage", e.what(), kExitUsage);
    }

    try {
        if (config_path.empty()) {
            if (const char* env = std::getenv("NEEDCAST_CONFIG")) config_path = env;
        }
        PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : PipelineConfig::load(config_path);
        for (const auto& [key, value] : overrides) cfg.set(key, value, fs::current_path());
        cfg.validate();

        if (ingest->parsed()) cmd_ingest(cfg);
        else if (sessions->parsed()) cmd_sessions(cfg);
        else if (fit_trans->parsed()) cmd_fit_transitions(cfg, precision_k);
        else if (build->parsed()) cmd_build_needs(cfg);
        else if (normalize->parsed()) cmd_normalize_needs(cfg);
        else if (temporal->parsed()) cmd_fit_temporal(cfg);
        else if (rank->parsed()) cmd_rank(cfg, last_activity, model_name, k_flag.value_or(cfg.dashboard_k), normalize_scores);
        else if (evaluate->parsed()) cmd_evaluate(cfg, models_arg);
    } catch (const UsageError& e) {
        return fail("usage", e.what(), kExitUsage);
    } catch (const DataError& e) {
        return fail("data", e.what(), kExitData);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), kExitInternal);
    }
    return 0;
}

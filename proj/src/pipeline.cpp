#include "mediaframe/pipeline.hpp"

#include "mediaframe/topics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

namespace mediaframe {

namespace {

template <class Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fn(nlohmann::json::parse(line));
        } catch (const std::exception& e) {
            throw Error(ErrorCode::IoError, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

Eigen::VectorXd segment(const MonthlySeries& s, const MonthRange& r) {
    return s.values.segment(r.first.index() - s.start.index(), r.size());
}

}  // namespace

std::vector<Post> load_posts(const std::string& path) {
    std::vector<Post> posts;
    for_each_jsonl(path, [&](const nlohmann::json& j) {
        Post p;
        p.month = YearMonth::parse(j.at("date").get<std::string>());
        p.state = j.at("state").get<std::string>();
        p.text = j.value("text", std::string());
        if (j.contains("score") && !j.at("score").is_null()) p.score = j.at("score").get<int>();
        posts.push_back(std::move(p));
    });
    return posts;
}

std::vector<Bill> load_bills(const std::string& path) {
    std::vector<Bill> bills;
    for_each_jsonl(path, [&](const nlohmann::json& j) {
        Bill b;
        b.state = j.at("state").get<std::string>();
        b.year = j.at("year").get<int>();
        b.doc_id = j.value("doc_id", std::string());
        b.text = j.at("text").get<std::string>();
        bills.push_back(std::move(b));
    });
    return bills;
}

std::map<std::string, LegislativeIndex> load_legislative_index(const std::string& path, int first_year,
                                                               int last_year) {
    std::map<std::string, LegislativeIndex> out;
    for_each_jsonl(path, [&](const nlohmann::json& j) {
        const auto state = j.at("state").get<std::string>();
        const int year = j.at("year").get<int>();
        auto& idx = out[state];
        idx.state = state;
        idx.first_year = first_year;
        idx.last_year = last_year;
        if (year < first_year || year > last_year) return;
        auto& themes = idx.themes_by_year[year];
        for (const auto& t : j.value("themes", std::vector<std::string>{})) themes.insert(t);
        idx.bill_count[year] = j.value("bill_count", 0);
    });
    return out;
}

std::unique_ptr<AnnotationBackend> make_backend(const RunConfig& config) {
    if (config.backend_command.empty()) return std::make_unique<LexiconStubBackend>();
    return std::make_unique<ProcessBackend>(config.backend_command);
}

BatchResult score_posts(std::vector<Post>& posts, AnnotationBackend& backend, int max_in_flight) {
    std::vector<std::size_t> pending;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        if (posts[i].score) continue;
        pending.push_back(i);
        texts.push_back(posts[i].text);
    }
    BatchOptions opts;
    opts.max_in_flight = max_in_flight;
    auto result = annotate_batch(texts, AnnotationTask::post_sentiment(), backend, opts);
    for (std::size_t k = 0; k < pending.size(); ++k)
        if (result.labels[k].valid()) posts[pending[k]].score = std::stoi(result.labels[k].values.front());
    return result;
}

std::string ScreenRow::topic() const { return theme + "_" + std::string(to_string(polarity)); }

ScreeningOutcome run_screening(const RunConfig& config, const std::string& state,
                               const std::vector<gkg::GkgRecord>& state_articles,
                               const MonthlySeries& sentiment) {
    ScreeningOutcome out;
    const MonthRange months = config.screening_months();
    const AdfLagPolicy policy;

    auto sent = make_stationary(restrict_to(sentiment, months), policy, config.max_gaps);
    if (sent.transform == Transform::Dropped)
        throw Error(ErrorCode::InvalidArgument, "sentiment series dropped by the stationarity check");
    out.sentiment = sent.series;
    out.sentiment_transform = sent.transform;

    auto table = build_series(state_articles, config.article_months, state, ToneLexicon{});
    const std::size_t before = table.series.size();
    const auto kept = prune_infrequent(std::move(table.series), config.prune_threshold);
    out.pruned = before - kept.size();

    std::vector<ScreenRow> rows;
    std::map<std::string, MonthlySeries> stationary;
    std::map<std::string, MonthlySeries> raw;
    for (const auto& s : kept) {
        const auto st = make_stationary(restrict_to(s.series, months), policy, config.max_gaps);
        if (st.transform == Transform::Dropped) {
            ++out.dropped_nonstationary;
            continue;
        }
        const MonthRange common = intersect(st.series.range(), out.sentiment.range());
        if (common.empty()) {
            ++out.failed;
            continue;
        }
        GrangerResult g;
        try {
            g = scan_lags(segment(st.series, common), segment(out.sentiment, common), config.lags);
        } catch (const Error&) {
            ++out.failed;
            continue;
        }
        ++out.tested;
        ScreenRow row{s.theme, s.polarity, g, st.transform, g.p_value};
        stationary[row.topic()] = st.series;
        raw[row.topic()] = s.series;
        rows.push_back(std::move(row));
    }

    if (config.bh_correction && !rows.empty()) {
        std::vector<double> p;
        for (const auto& r : rows) p.push_back(r.granger.p_value);
        const auto adj = benjamini_hochberg(p);
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i].p_adjusted = adj[i];
    }

    for (auto& r : rows)
        if (r.p_adjusted < config.significance) out.significant.push_back(r);
    std::sort(out.significant.begin(), out.significant.end(), [](const ScreenRow& a, const ScreenRow& b) {
        const double ca = std::abs(a.granger.cc), cb = std::abs(b.granger.cc);
        if (ca != cb) return ca > cb;
        if (a.p_adjusted != b.p_adjusted) return a.p_adjusted < b.p_adjusted;
        return a.topic() < b.topic();
    });
    for (const auto& r : out.significant) {
        out.stationary[r.topic()] = stationary[r.topic()];
        out.raw[r.topic()] = raw[r.topic()];
    }
    const std::size_t top = std::min<std::size_t>(out.significant.size(), config.screen_top);
    out.rows.assign(out.significant.begin(), out.significant.begin() + static_cast<std::ptrdiff_t>(top));
    return out;
}

VarOutcome run_var(const RunConfig& config, const ScreeningOutcome& screening) {
    if (screening.significant.empty())
        throw Error(ErrorCode::InsufficientObservations, "no significant screening rows to model");
    MonthRange common = screening.sentiment.range();
    for (const auto& r : screening.significant)
        common = intersect(common, screening.stationary.at(r.topic()).range());
    if (common.empty()) throw Error(ErrorCode::InsufficientObservations, "screened series do not overlap");

    std::vector<Candidate> candidates;
    for (const auto& r : screening.significant) {
        Candidate c{r.topic(), segment(screening.stationary.at(r.topic()), common), r.granger};
        c.granger.p_value = r.p_adjusted;
        candidates.push_back(std::move(c));
    }
    SelectionOptions opts;
    opts.k = config.var_features;
    opts.alpha = config.significance;
    opts.variance_target = config.variance_target;
    opts.redundancy = config.redundancy;

    VarOutcome out;
    out.months = common;
    out.selection = select_features(std::move(candidates), opts);
    const auto& features = out.selection.features;
    if (features.empty()) throw Error(ErrorCode::InsufficientObservations, "no features survived selection");

    Eigen::MatrixXd data(common.size(), static_cast<Eigen::Index>(features.size()) + 1);
    data.col(0) = segment(screening.sentiment, common);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < features.size(); ++i) {
        data.col(static_cast<Eigen::Index>(i) + 1) = features[i].values;
        names.push_back(features[i].name);
    }
    const auto z = standardize(data);
    if (!z.dropped.empty()) throw Error(ErrorCode::ZeroVariance, "constant column in the VAR system");
    out.var = var_fit(z.data.col(0), z.data.rightCols(z.data.cols() - 1), names);
    return out;
}

std::vector<std::string> top_themes(const std::vector<gkg::GkgRecord>& records, int limit) {
    std::map<std::string, int> counts;
    for (const auto& r : records) {
        std::set<std::string> seen;
        for (const auto& t : r.themes)
            if (seen.insert(t.code).second) ++counts[t.code];
    }
    std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ranked.size() && static_cast<int>(i) < limit; ++i) out.push_back(ranked[i].first);
    return out;
}

LegislativeIndex build_legislative_index(const RunConfig& config, const std::string& state,
                                         const std::vector<Bill>& bills,
                                         const std::vector<std::string>& candidate_themes,
                                         AnnotationBackend& backend) {
    LegislativeIndex idx;
    idx.state = state;
    idx.first_year = config.legis_first_year;
    idx.last_year = config.legis_last_year;
    std::map<int, std::vector<const Bill*>> by_year;
    for (const auto& b : bills)
        if (b.state == state && b.year >= idx.first_year && b.year <= idx.last_year) by_year[b.year].push_back(&b);

    const auto task = AnnotationTask::theme_map(candidate_themes);
    for (int year = idx.first_year; year <= idx.last_year; ++year) {
        const auto& year_bills = by_year[year];
        idx.bill_count[year] = static_cast<int>(year_bills.size());
        auto& themes = idx.themes_by_year[year];
        if (year_bills.empty() || candidate_themes.empty()) continue;

        if (config.keyword_mentions) {
            for (const auto* b : year_bills)
                for (const auto& t : keyword_mentions(b->text, candidate_themes)) themes.insert(t);
            continue;
        }

        std::vector<std::string> texts, ids;
        for (const auto* b : year_bills) {
            texts.push_back(b->text);
            ids.push_back(b->doc_id.empty() ? state + "-" + std::to_string(year) + "-" + std::to_string(ids.size())
                                            : b->doc_id);
        }
        Corpus corpus;
        try {
            corpus = preprocess(texts, ids);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyCorpus) throw;
            continue;
        }
        LdaOptions lda;
        lda.topics = config.lda_topics;
        lda.alpha = config.lda_alpha;
        lda.beta = config.lda_beta;
        lda.iterations = config.lda_iterations;
        lda.seed = mix_seed(config.seed, fnv1a("lda/" + state + "/" + std::to_string(year)));
        const auto model = lda_fit(corpus, lda);

        std::vector<std::string> keyword_lists;
        for (int k = 0; k < model.topics; ++k) {
            std::string words;
            for (int id : model.top_words(k, config.lda_top_words)) {
                if (!words.empty()) words += ", ";
                words += corpus.vocabulary[static_cast<std::size_t>(id)];
            }
            keyword_lists.push_back(std::move(words));
        }
        BatchOptions opts;
        opts.max_in_flight = config.max_in_flight;
        const auto labels = annotate_batch(keyword_lists, task, backend, opts);
        for (const auto& l : labels.labels)
            for (const auto& t : l.values) themes.insert(t);
    }
    return idx;
}

namespace {

struct SharedInputs {
    gkg::ReadResult gkg;
    std::optional<std::vector<Post>> posts;
    std::optional<std::vector<Bill>> bills;
    std::optional<std::map<std::string, LegislativeIndex>> index;
};

Figure1 make_figure1(const RunConfig& config, const ScreeningOutcome& screening, const VarOutcome& var,
                     const MonthlySeries& sentiment) {
    Figure1 fig;
    fig.months = config.screening_months();
    fig.sentiment = restrict_to(sentiment, fig.months).values;
    fig.values.resize(fig.months.size(), static_cast<Eigen::Index>(var.selection.features.size()));
    for (std::size_t i = 0; i < var.selection.features.size(); ++i) {
        const auto& name = var.selection.features[i].name;
        fig.features.push_back(name);
        fig.values.col(static_cast<Eigen::Index>(i)) = restrict_to(screening.raw.at(name), fig.months).values;
    }
    return fig;
}

std::optional<SalienceRow> salience_row(const std::string& scope, const std::map<int, int>& articles,
                                        const std::map<int, int>& bills) {
    SalienceRow row;
    row.scope = scope;
    row.fit = salience_regression(articles, bills);
    row.years = static_cast<int>(row.fit.fitted.size());
    return row;
}

StateReport run_state(const RunConfig& config, const std::string& state, const SharedInputs& in,
                      const StageSelection& stages, AnnotationBackend& backend, std::vector<Gap>& gaps) {
    StateReport sr;
    sr.state = state;
    const auto articles = gkg::filter_articles(in.gkg.records, config.theme_filter, state);
    sr.articles = articles.size();
    sr.per_source = gkg::articles_per_source(articles, config.article_months);
    auto gap = [&](const std::string& stage, const std::string& message) {
        gaps.push_back({state, stage, message});
    };

    if (stages.screening || stages.var) {
        if (!in.posts) {
            gap("screening", "no sentiment input");
        } else {
            MonthlySeries sentiment;
            try {
                std::vector<ScoredPost> scored;
                for (const auto& p : *in.posts)
                    if (p.state == state && p.score && config.post_months.contains(p.month))
                        scored.push_back({p.month, *p.score});
                sentiment = aggregate_posts(scored, config.post_months, state).series;
                sr.screening = run_screening(config, state, articles, sentiment);
            } catch (const Error& e) {
                gap("screening", e.what());
            }
            if (stages.var && sr.screening) {
                try {
                    sr.var = run_var(config, *sr.screening);
                    sr.figure1 = make_figure1(config, *sr.screening, *sr.var, sentiment);
                } catch (const Error& e) {
                    gap("var", e.what());
                }
            }
        }
    }

    if (stages.legislation) {
        try {
            std::optional<LegislativeIndex> index;
            if (in.index) {
                const auto it = in.index->find(state);
                if (it == in.index->end()) throw Error(ErrorCode::InvalidArgument, "state absent from legislative index");
                index = it->second;
            } else if (in.bills) {
                const auto candidates = config.candidate_themes.empty()
                                            ? top_themes(articles, config.theme_candidates)
                                            : config.candidate_themes;
                index = build_legislative_index(config, state, *in.bills, candidates, backend);
            }
            if (!index) throw Error(ErrorCode::InvalidArgument, "no legislation input");
            const auto freq = yearly_theme_frequencies(articles, config.legis_first_year, config.legis_last_year);
            sr.ttests = theme_ttest_table(freq, *index,
                                          config.pooled_ttest ? TTestVariant::Pooled : TTestVariant::Welch);
            sr.article_counts = yearly_article_counts(articles, config.legis_first_year, config.legis_last_year);
            sr.bill_counts = index->bill_count;
            try {
                sr.salience = salience_row(state, sr.article_counts, sr.bill_counts);
            } catch (const Error& e) {
                gap("salience", e.what());
            }
        } catch (const Error& e) {
            gap("legislation", e.what());
        }
    }
    return sr;
}

}  // namespace

RunReport run_pipeline(const RunConfig& config, const StageSelection& stages, AnnotationBackend* backend) {
    config.validate();
    if (config.gkg_paths.empty()) throw Error(ErrorCode::ConfigError, "paths.gkg is empty");

    RunReport report;
    report.config = config;
    SharedInputs in;
    for (const auto& path : config.gkg_paths) {
        auto part = gkg::read_gkg_file(path);
        in.gkg.records.insert(in.gkg.records.end(), std::make_move_iterator(part.records.begin()),
                              std::make_move_iterator(part.records.end()));
        in.gkg.skipped.insert(in.gkg.skipped.end(), part.skipped.begin(), part.skipped.end());
        in.gkg.lines += part.lines;
        in.gkg.stats.dropped_themes += part.stats.dropped_themes;
        in.gkg.stats.dropped_locations += part.stats.dropped_locations;
        in.gkg.stats.dropped_tones += part.stats.dropped_tones;
        in.gkg.stats.tone_mismatches += part.stats.tone_mismatches;
    }
    report.gkg_lines = in.gkg.lines;
    report.skipped = in.gkg.skipped;
    report.parse_stats = in.gkg.stats;

    std::unique_ptr<AnnotationBackend> owned;
    auto get_backend = [&]() -> AnnotationBackend& {
        if (backend) return *backend;
        if (!owned) owned = make_backend(config);
        return *owned;
    };

    if (stages.screening || stages.var) {
        if (config.posts_path.empty()) {
            report.gaps.push_back({"*", "posts", "no posts input configured"});
        } else {
            try {
                auto posts = load_posts(config.posts_path);
                if (std::any_of(posts.begin(), posts.end(), [](const Post& p) { return !p.score; })) {
                    const auto scored = score_posts(posts, get_backend(), config.max_in_flight);
                    report.posts_invalid = scored.invalid;
                    report.posts_unavailable = scored.unavailable;
                }
                in.posts = std::move(posts);
            } catch (const Error& e) {
                report.gaps.push_back({"*", "posts", e.what()});
            }
        }
    }
    if (stages.legislation) {
        try {
            if (!config.legis_index_path.empty())
                in.index = load_legislative_index(config.legis_index_path, config.legis_first_year,
                                                  config.legis_last_year);
            else if (!config.legislation_path.empty())
                in.bills = load_bills(config.legislation_path);
        } catch (const Error& e) {
            report.gaps.push_back({"*", "legislation", e.what()});
        }
    }

    const std::size_t n = config.states.size();
    report.states.resize(n);
    std::vector<std::vector<Gap>> gaps(n);
    std::vector<std::exception_ptr> failures(n);
    unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    // Resolved before the workers start so they never race on the lazy backend.
    LexiconStubBackend unused_backend;
    AnnotationBackend& state_backend =
        in.bills && !config.keyword_mentions ? get_backend() : static_cast<AnnotationBackend&>(unused_backend);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                report.states[i] = run_state(config, config.states[i], in, stages, state_backend, gaps[i]);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (failures[i]) {
            report.states[i].state = config.states[i];
            try {
                std::rethrow_exception(failures[i]);
            } catch (const std::exception& e) {
                gaps[i].push_back({config.states[i], "state", e.what()});
            }
        }
        report.gaps.insert(report.gaps.end(), gaps[i].begin(), gaps[i].end());
    }

    if (stages.legislation) {
        // Pooled over every state-year pair; keys only need to be distinct.
        std::map<int, int> articles, bills;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& s = report.states[i];
            if (!s.ttests) continue;
            for (const auto& [year, count] : s.article_counts) {
                const auto b = s.bill_counts.find(year);
                if (b == s.bill_counts.end()) continue;
                const int key = static_cast<int>(i) * 10000 + year;
                articles[key] = count;
                bills[key] = b->second;
            }
        }
        try {
            report.pooled_salience = salience_row("ALL", articles, bills);
        } catch (const Error& e) {
            report.gaps.push_back({"ALL", "salience", e.what()});
        }
    }
    return report;
}

int exit_code(const RunReport& report) { return report.partial() ? 2 : 0; }

}  // namespace mediaframe

#include "mediaframe/annotate.hpp"
#include "mediaframe/config.hpp"
#include "mediaframe/gkg.hpp"
#include "mediaframe/pipeline.hpp"
#include "mediaframe/series.hpp"
#include "mediaframe/topics.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace mf = mediaframe;

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> states;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::vector<std::string> overrides;
    std::string out = "out";
};

void add_common(CLI::App* cmd, Common& c, bool need_config = true) {
    auto* opt = cmd->add_option("--config", c.config_path, "Run configuration file");
    if (need_config) opt->required();
    cmd->add_option("--state", c.states, "Restrict to these state codes (repeatable)");
    cmd->add_option("--seed", c.seed, "Root seed");
    cmd->add_option("--threads", c.threads, "Worker threads (0 = hardware)");
    cmd->add_option("--set", c.overrides, "Config override section.key=value (repeatable)");
    cmd->add_option("--out", c.out, "Output directory");
}

mf::RunConfig resolve(const Common& c) {
    mf::RunConfig config = mf::load_config(c.config_path);
    for (const auto& o : c.overrides) mf::apply_override(config, o);
    if (!c.states.empty()) config.states = c.states;
    if (c.seed) config.seed = *c.seed;
    if (c.threads) config.threads = *c.threads;
    config.validate();
    return config;
}

void print_gaps(const mf::RunReport& report) {
    for (const auto& g : report.gaps) std::cerr << "gap: " << g.state << " " << g.stage << ": " << g.message << '\n';
}

int run_stages(const Common& c, mf::StageSelection stages) {
    const auto config = resolve(c);
    const auto report = mf::run_pipeline(config, stages);
    mf::emit_report(report, c.out);
    print_gaps(report);
    return mf::exit_code(report);
}

std::vector<mf::gkg::GkgRecord> read_all(const std::vector<std::string>& paths, mf::gkg::ReadResult* total) {
    std::vector<mf::gkg::GkgRecord> records;
    for (const auto& p : paths) {
        auto r = mf::gkg::read_gkg_file(p);
        records.insert(records.end(), r.records.begin(), r.records.end());
        if (total) {
            total->lines += r.lines;
            total->skipped.insert(total->skipped.end(), r.skipped.begin(), r.skipped.end());
        }
    }
    return records;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Topic-sentiment screening and legislation linkage for news and social media"};
    app.require_subcommand(1);

    Common common;

    auto* ingest = app.add_subcommand("ingest", "Parse GKG files and report skipped rows");
    std::vector<std::string> ingest_files;
    ingest->add_option("files", ingest_files, "GKG files (default: paths.gkg from the config)");
    add_common(ingest, common, false);

    auto* series = app.add_subcommand("series", "Build pruned topic-sentiment series per state");
    add_common(series, common);

    auto* screen = app.add_subcommand("screen", "Stationarity and Granger screening");
    add_common(screen, common);

    auto* var = app.add_subcommand("var", "Screening, feature selection and VAR");
    add_common(var, common);

    auto* legis = app.add_subcommand("legis", "Legislation index, per-theme t-tests and salience");
    add_common(legis, common);

    auto* report = app.add_subcommand("report", "Run every stage and write all tables");
    add_common(report, common);

    auto* lda = app.add_subcommand("lda", "Topic model of one state-year of legislation");
    add_common(lda, common);
    int lda_year = 0;
    std::vector<int> k_range;
    lda->add_option("--year", lda_year, "Legislative year")->required();
    lda->add_option("--k-range", k_range, "Choose K by UMass coherence from these values");

    auto* annotate = app.add_subcommand("annotate", "Score posts through an annotation backend");
    std::string annotate_input;
    std::string backend_cmd;
    bool serve_stub = false;
    int max_in_flight = 4;
    annotate->add_option("--input", annotate_input, "Posts JSONL");
    annotate->add_option("--backend-cmd", backend_cmd, "Backend command (NDJSON over stdin/stdout)");
    annotate->add_flag("--serve-stub", serve_stub, "Serve the built-in stub on stdin/stdout");
    annotate->add_option("--max-in-flight", max_in_flight, "Concurrent requests");
    std::string annotate_out = "annotated.jsonl";
    annotate->add_option("--out", annotate_out, "Output JSONL");

    auto* synth = app.add_subcommand("synth", "Write a synthetic input set with one planted theme");
    mf::SynthOptions synth_opts;
    std::string synth_out = "synth";
    synth->add_option("--out", synth_out, "Output directory");
    synth->add_option("--state", synth_opts.states, "State codes");
    synth->add_option("--seed", synth_opts.seed, "Seed");
    synth->add_option("--lag", synth_opts.planted_lag, "Planted lag in months");
    synth->add_option("--effect", synth_opts.planted_effect, "Planted effect size");
    synth->add_option("--articles-per-month", synth_opts.articles_per_month, "Articles per month");
    synth->add_option("--posts-per-month", synth_opts.posts_per_month, "Posts per month");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            std::vector<std::string> files = ingest_files;
            if (files.empty()) {
                if (common.config_path.empty()) throw mf::Error(mf::ErrorCode::ConfigError, "no GKG files given");
                files = resolve(common).gkg_paths;
            }
            mf::gkg::ReadResult total;
            const auto records = read_all(files, &total);
            std::cout << "lines " << total.lines << ", records " << records.size() << ", skipped "
                      << total.skipped.size() << '\n';
            std::cerr << mf::gkg::format_skip_report(total.skipped, total.lines);
            return 0;
        }
        if (*series) {
            const auto config = resolve(common);
            const auto records = read_all(config.gkg_paths, nullptr);
            std::filesystem::create_directories(common.out);
            for (const auto& state : config.states) {
                const auto articles = mf::gkg::filter_articles(records, config.theme_filter, state);
                auto table = mf::build_series(articles, config.article_months, state, mf::ToneLexicon{});
                const auto kept = mf::prune_infrequent(std::move(table.series), config.prune_threshold);
                std::ofstream out(std::filesystem::path(common.out) / ("series_" + state + ".csv"));
                mf::write_series_csv(out, kept);
            }
            return 0;
        }
        if (*screen) return run_stages(common, {true, false, false});
        if (*var) return run_stages(common, {true, true, false});
        if (*legis) return run_stages(common, {false, false, true});
        if (*report) return run_stages(common, {});
        if (*lda) {
            const auto config = resolve(common);
            if (config.legislation_path.empty()) throw mf::Error(mf::ErrorCode::ConfigError, "paths.legislation is empty");
            std::vector<std::string> texts, ids;
            for (const auto& b : mf::load_bills(config.legislation_path)) {
                if (b.state != config.states.front() || b.year != lda_year) continue;
                texts.push_back(b.text);
                ids.push_back(b.doc_id);
            }
            const auto corpus = mf::preprocess(texts, ids);
            mf::LdaOptions opts;
            opts.topics = config.lda_topics;
            opts.alpha = config.lda_alpha;
            opts.beta = config.lda_beta;
            opts.iterations = config.lda_iterations;
            opts.seed = mf::mix_seed(config.seed, mf::fnv1a("lda/" + config.states.front() + "/" +
                                                             std::to_string(lda_year)));
            if (!k_range.empty()) opts.topics = mf::select_k(corpus, k_range, opts, config.lda_top_words);
            auto model = mf::lda_fit(corpus, opts);
            model.coherence = mf::umass_coherence(model, corpus, config.lda_top_words);
            std::filesystem::create_directories(common.out);
            std::ofstream out(std::filesystem::path(common.out) /
                              ("lda_" + config.states.front() + "_" + std::to_string(lda_year) + ".json"));
            mf::write_topic_report(out, model, corpus, config.lda_top_words);
            return 0;
        }
        if (*annotate) {
            if (serve_stub) {
                mf::LexiconStubBackend stub;
                mf::serve_backend(stub, std::cin, std::cout);
                return 0;
            }
            if (annotate_input.empty()) throw mf::Error(mf::ErrorCode::ConfigError, "--input is required");
            auto posts = mf::load_posts(annotate_input);
            std::vector<std::optional<int>> gold;
            for (auto& p : posts) {
                gold.push_back(p.score);
                p.score.reset();
            }
            std::unique_ptr<mf::AnnotationBackend> backend;
            if (backend_cmd.empty())
                backend = std::make_unique<mf::LexiconStubBackend>();
            else
                backend = std::make_unique<mf::ProcessBackend>(backend_cmd);
            const auto result = mf::score_posts(posts, *backend, max_in_flight);
            std::ofstream out(annotate_out);
            if (!out) throw mf::Error(mf::ErrorCode::IoError, "cannot write " + annotate_out);
            Eigen::MatrixXd codings(static_cast<Eigen::Index>(posts.size()), 2);
            std::vector<mf::Label> model_labels, gold_labels;
            bool any_gold = false;
            for (std::size_t i = 0; i < posts.size(); ++i) {
                nlohmann::ordered_json j{{"date", posts[i].month.str()}, {"state", posts[i].state}, {"text", posts[i].text}};
                j["score"] = posts[i].score ? nlohmann::json(*posts[i].score) : nlohmann::json(nullptr);
                out << j.dump() << '\n';
                const auto idx = static_cast<Eigen::Index>(i);
                codings(idx, 0) = gold[i] ? *gold[i] : mf::kMissing;
                codings(idx, 1) = posts[i].score ? *posts[i].score : mf::kMissing;
                if (gold[i]) {
                    any_gold = true;
                    gold_labels.push_back({{std::to_string(*gold[i])}});
                    model_labels.push_back(posts[i].score ? mf::Label{{std::to_string(*posts[i].score)}}
                                                          : mf::Label::invalid());
                }
            }
            std::cerr << "annotated " << posts.size() << ", invalid " << result.invalid << ", unavailable "
                      << result.unavailable << '\n';
            if (any_gold) {
                std::cerr << "accuracy " << mf::format_real(mf::label_accuracy(model_labels, gold_labels)) << '\n';
                try {
                    const auto rel = mf::krippendorff_alpha(codings, mf::DistanceMetric::Interval);
                    std::cerr << "krippendorff_alpha " << mf::format_real(rel.alpha) << '\n';
                } catch (const mf::Error& e) {
                    std::cerr << e.what() << '\n';
                }
            }
            return result.unavailable ? 2 : 0;
        }
        if (*synth) {
            const auto config = mf::synthesize(synth_opts, synth_out);
            std::cout << (std::filesystem::path(synth_out) / "config.toml").string() << '\n';
            (void)config;
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

#ifndef MEDIAFRAME_PIPELINE_HPP
#define MEDIAFRAME_PIPELINE_HPP

// Per-state orchestration, input loading, report emission and the synthetic data generator.

#include "mediaframe/annotate.hpp"
#include "mediaframe/config.hpp"
#include "mediaframe/econometrics.hpp"
#include "mediaframe/gkg.hpp"
#include "mediaframe/legis.hpp"
#include "mediaframe/multivariate.hpp"
#include "mediaframe/series.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mediaframe {

struct Post {
    YearMonth month;
    std::string state;
    std::string text;
    std::optional<int> score;
};

struct Bill {
    std::string state;
    int year = 0;
    std::string doc_id;
    std::string text;
};

/// JSONL loaders. Rows that fail to parse raise IoError naming the file and line.
std::vector<Post> load_posts(const std::string& path);
std::vector<Bill> load_bills(const std::string& path);
/// `{"state","year","themes":[...],"bill_count"}` per line.
std::map<std::string, LegislativeIndex> load_legislative_index(const std::string& path, int first_year,
                                                               int last_year);

/// Stub annotator unless the config names a backend command.
std::unique_ptr<AnnotationBackend> make_backend(const RunConfig& config);

/// Scores unscored posts through the backend; INVALID replies leave the post unscored.
BatchResult score_posts(std::vector<Post>& posts, AnnotationBackend& backend, int max_in_flight);

struct Gap {
    std::string state;
    std::string stage;
    std::string message;
};

struct ScreenRow {
    std::string theme;
    Polarity polarity = Polarity::Pos;
    GrangerResult granger;
    Transform transform = Transform::None;
    double p_adjusted = 1.0;  // equals granger.p_value unless BH correction is on

    std::string topic() const;
};

struct ScreeningOutcome {
    std::vector<ScreenRow> rows;         // significant, |cc| descending, at most screen_top
    std::vector<ScreenRow> significant;  // every significant row, same order
    std::size_t tested = 0;
    std::size_t pruned = 0;
    std::size_t dropped_nonstationary = 0;
    std::size_t failed = 0;  // too short after alignment and similar
    Transform sentiment_transform = Transform::None;
    MonthlySeries sentiment;  // stationary form
    std::map<std::string, MonthlySeries> stationary;  // by topic, significant rows only
    std::map<std::string, MonthlySeries> raw;         // article-range frequencies, same keys
};

struct VarOutcome {
    VarResult var;
    Selection selection;
    MonthRange months;
};

struct Figure1 {
    MonthRange months;
    Eigen::VectorXd sentiment;
    std::vector<std::string> features;
    Eigen::MatrixXd values;  // months x features, raw frequencies
};

struct SalienceRow {
    std::string scope;  // state code or ALL
    int years = 0;
    OlsResult fit;
};

struct StateReport {
    std::string state;
    std::size_t articles = 0;
    std::optional<ScreeningOutcome> screening;
    std::optional<VarOutcome> var;
    std::optional<Figure1> figure1;
    std::optional<ThemeTTestTable> ttests;
    std::optional<SalienceRow> salience;
    std::map<int, int> article_counts;  // per year, filtered articles
    std::map<int, int> bill_counts;
    MonthlySeries per_source;
};

struct RunReport {
    RunConfig config;
    std::vector<StateReport> states;  // config order
    std::optional<SalienceRow> pooled_salience;
    std::vector<Gap> gaps;
    std::size_t gkg_lines = 0;
    std::vector<gkg::SkipEntry> skipped;
    gkg::ParseStats parse_stats;
    std::size_t posts_invalid = 0;
    std::size_t posts_unavailable = 0;

    bool partial() const { return !gaps.empty(); }
};

struct StageSelection {
    bool screening = true;
    bool var = true;
    bool legislation = true;
};

/// Screening chain for one state's filtered articles against its monthly sentiment.
ScreeningOutcome run_screening(const RunConfig& config, const std::string& state,
                               const std::vector<gkg::GkgRecord>& state_articles,
                               const MonthlySeries& sentiment);

/// Feature selection and VAR on a screening outcome. Throws when too few features survive.
VarOutcome run_var(const RunConfig& config, const ScreeningOutcome& screening);

/// Legislation index for one state: index file, keyword matching, or LDA plus theme mapping.
LegislativeIndex build_legislative_index(const RunConfig& config, const std::string& state,
                                         const std::vector<Bill>& bills,
                                         const std::vector<std::string>& candidate_themes,
                                         AnnotationBackend& backend);

/// Most frequent article themes (article count desc, then code), at most `limit`.
std::vector<std::string> top_themes(const std::vector<gkg::GkgRecord>& records, int limit);

/// Loads inputs named in the config and runs the selected stages for every state.
/// Stage failures become gaps; only unreadable configuration or GKG input throws.
RunReport run_pipeline(const RunConfig& config, const StageSelection& stages = {},
                       AnnotationBackend* backend = nullptr);

/// Writes every table, figure dataset and provenance.json into `out_dir`.
void emit_report(const RunReport& report, const std::string& out_dir);

/// 0 success, 2 partial, 1 fatal.
int exit_code(const RunReport& report);

// ---------------------------------------------------------------------------

struct SynthOptions {
    std::vector<std::string> states{"CA"};
    MonthRange article_months{{2015, 3}, {2023, 12}};
    MonthRange post_months{{2015, 1}, {2023, 12}};
    int articles_per_month = 120;
    int posts_per_month = 60;
    std::string planted_theme = "EPU_POLICY_CONGRESSIONAL";
    int planted_lag = 2;
    double planted_effect = 0.6;
    std::uint64_t seed = 42;
};

/// Writes gkg.csv, posts.jsonl, legislation.jsonl, legis_index.jsonl and config.toml into
/// `out_dir`. The planted theme's POS frequency drives sentiment `planted_lag` months later.
RunConfig synthesize(const SynthOptions& options, const std::string& out_dir);

}  // namespace mediaframe

#endif  // MEDIAFRAME_PIPELINE_HPP

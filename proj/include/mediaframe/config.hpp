#ifndef MEDIAFRAME_CONFIG_HPP
#define MEDIAFRAME_CONFIG_HPP

#include "mediaframe/core.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace mediaframe {

/// Every knob of a run. Numeric defaults are the values the method was published with.
struct RunConfig {
    std::vector<std::string> states{"CA", "NY", "FL", "WA", "OR"};
    MonthRange article_months{{2015, 3}, {2023, 12}};
    MonthRange post_months{{2015, 1}, {2023, 12}};
    std::set<std::string> theme_filter;

    // screening
    double prune_threshold = 0.015;
    std::vector<int> lags{1, 2, 3};
    double significance = 0.05;
    int screen_top = 20;
    bool bh_correction = false;
    int max_gaps = 2;

    // multivariate
    double variance_target = 0.95;
    int var_features = 6;
    double redundancy = 0.9;

    // topics and legislation
    int lda_topics = 9;
    int lda_iterations = 1000;
    double lda_alpha = -1.0;  // 50 / K
    double lda_beta = 0.01;
    int lda_top_words = 10;
    int theme_candidates = 500;
    std::vector<std::string> candidate_themes;  // empty: most frequent article themes
    int legis_first_year = 2015;
    int legis_last_year = 2023;
    bool pooled_ttest = false;
    bool keyword_mentions = false;

    std::uint64_t seed = 42;
    int threads = 0;  // 0: hardware concurrency
    int max_in_flight = 4;

    // inputs; relative paths resolve against the config file's directory
    std::vector<std::string> gkg_paths;
    std::string posts_path;
    std::string legislation_path;
    std::string legis_index_path;
    std::string backend_command;  // empty: built-in lexicon stub

    bool operator==(const RunConfig&) const = default;

    /// Months used for screening: articles and posts both present.
    MonthRange screening_months() const { return intersect(article_months, post_months); }

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Reads the `key = value` / `[table]` config format. Relative paths are resolved
/// against `base_dir`.
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Writes the same format back; parse_config(to_config_text(c)) == c for absolute paths.
std::string to_config_text(const RunConfig& config);

/// Canonical form; `threads` and `max_in_flight` are left out because they cannot change results.
void to_json(nlohmann::json& j, const RunConfig& config);
void from_json(const nlohmann::json& j, RunConfig& config);

/// FNV-1a of the canonical JSON form, hex encoded.
std::string config_hash(const RunConfig& config);

/// Applies `key=value` overrides using the same keys as the file (e.g. `var.features=4`).
void apply_override(RunConfig& config, const std::string& assignment);

}  // namespace mediaframe

#endif  // MEDIAFRAME_CONFIG_HPP

#include "mediaframe/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace mediaframe {

namespace {

namespace fs = std::filesystem;

struct Background {
    const char* code;
    double rate;
};

// Themes unrelated to sentiment; each appears independently at its own rate.
constexpr Background kBackground[] = {
    {"GENERAL_HEALTH", 0.45}, {"MEDICAL", 0.30},       {"LEGISLATION", 0.25}, {"ARREST", 0.20},
    {"UNEMPLOYMENT", 0.18},   {"TAX_FNCACT", 0.15},    {"EDUCATION", 0.12},   {"WB_2432_FRAGILITY", 0.10},
    {"CRIME", 0.08},          {"AFFECT", 0.02},
};

const std::vector<std::string> kFilterThemes = {"POVERTY", "UNGP_NEED_OF_SHELTERS"};

const std::vector<std::string> kFiller = {"section", "amend", "code", "relating", "act", "provide",
                                          "county", "program", "fund", "department"};

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    return out;
}

std::string lower_words(const std::string& code) {
    std::string s;
    for (char c : code) s.push_back(c == '_' ? ' ' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return s;
}

}  // namespace

RunConfig synthesize(const SynthOptions& options, const std::string& out_dir) {
    if (options.states.empty()) throw Error(ErrorCode::InvalidArgument, "synth: no states");
    if (options.articles_per_month < 10 || options.posts_per_month < 1)
        throw Error(ErrorCode::InvalidArgument, "synth: too few articles or posts per month");
    if (options.planted_lag < 1) throw Error(ErrorCode::InvalidArgument, "synth: planted lag must be >= 1");
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir + ": " + ec.message());

    auto gkg_out = open_out(dir / "gkg.csv");
    auto posts_out = open_out(dir / "posts.jsonl");
    auto bills_out = open_out(dir / "legislation.jsonl");
    auto index_out = open_out(dir / "legis_index.jsonl");

    const MonthRange all{std::min(options.article_months.first, options.post_months.first),
                         std::max(options.article_months.last, options.post_months.last)};
    const int lag = options.planted_lag;
    const int n_articles = options.articles_per_month;
    const int half = n_articles / 2;

    for (const auto& state : options.states) {
        std::mt19937_64 rng(mix_seed(options.seed, fnv1a("synth/" + state)));

        // AR(1) driver with unit variance, defined from `lag` months before the first month.
        const int months = all.size() + lag;
        Eigen::VectorXd z(months);
        z(0) = standard_normal(rng);
        for (int t = 1; t < months; ++t) z(t) = 0.3 * z(t - 1) + std::sqrt(1.0 - 0.09) * standard_normal(rng);

        std::vector<double> sentiment(static_cast<std::size_t>(all.size()));
        double prev = 3.0;
        for (int t = 0; t < all.size(); ++t) {
            const double y = 3.0 + 0.3 * (prev - 3.0) + options.planted_effect * z(t) + 0.25 * standard_normal(rng);
            sentiment[static_cast<std::size_t>(t)] = y;
            prev = y;
        }

        int serial = 0;
        for (int t = 0; t < all.size(); ++t) {
            const YearMonth ym = all.first.plus(t);
            if (options.article_months.contains(ym)) {
                const double share = std::clamp(0.30 + 0.10 * z(t + lag), 0.05, 0.45);
                const int planted = static_cast<int>(std::lround(share * n_articles));
                // Exactly half the articles are positive so other themes' POS shares do not
                // inherit the planted signal.
                std::vector<int> positive(static_cast<std::size_t>(n_articles), 0);
                std::fill(positive.begin(), positive.begin() + half, 1);
                std::shuffle(positive.begin() + planted, positive.end(), rng);
                for (int a = 0; a < n_articles; ++a) {
                    gkg::GkgRecord r;
                    r.date = {ym.year, ym.month, 1 + static_cast<int>(rng() % 28), 12, 0, 0};
                    char id[64];
                    std::snprintf(id, sizeof id, "%04d%02d%02d120000-%s-%d", ym.year, ym.month, r.date.day,
                                  state.c_str(), serial++);
                    r.record_id = id;
                    r.source_name = "source" + std::to_string(rng() % 12) + ".example.com";
                    int offset = 10;
                    auto add_theme = [&](const std::string& code) {
                        r.themes.push_back({code, offset});
                        offset += 37;
                    };
                    const double u = uniform01(rng);
                    if (u < 0.6) add_theme(kFilterThemes[0]);
                    if (u >= 0.4) add_theme(kFilterThemes[1]);
                    if (a < planted) add_theme(options.planted_theme);
                    for (const auto& b : kBackground)
                        if (uniform01(rng) < b.rate) add_theme(b.code);
                    gkg::Location loc;
                    loc.loc_type = 2;
                    loc.full_name = state + ", United States";
                    loc.country_code = "US";
                    loc.adm1_code = "US" + state;
                    loc.latitude = 36.0;
                    loc.longitude = -119.0;
                    loc.feature_id = state;
                    loc.char_offset = 5;
                    r.locations.push_back(loc);
                    gkg::ToneBlock tone;
                    const double strong = 3.0 + uniform01(rng);
                    const double weak = 1.0 + uniform01(rng);
                    tone.positive_score = positive[static_cast<std::size_t>(a)] ? strong : weak;
                    tone.negative_score = positive[static_cast<std::size_t>(a)] ? weak : strong;
                    tone.tone = tone.positive_score - tone.negative_score;
                    tone.polarity = tone.positive_score + tone.negative_score;
                    tone.word_count = 300 + static_cast<int>(rng() % 700);
                    r.tone = tone;
                    gkg_out << gkg::to_gkg_line(r) << '\n';
                }
            }
            if (options.post_months.contains(ym)) {
                for (int p = 0; p < options.posts_per_month; ++p) {
                    const double raw = sentiment[static_cast<std::size_t>(t)] + 0.8 * standard_normal(rng);
                    const int score = static_cast<int>(std::clamp<long>(std::lround(raw), 1, 5));
                    char date[32];
                    std::snprintf(date, sizeof date, "%04d-%02d-%02d", ym.year, ym.month,
                                  1 + static_cast<int>(rng() % 28));
                    nlohmann::ordered_json j{{"date", date},
                                             {"state", state},
                                             {"text", "post " + std::to_string(p) + " about homelessness"},
                                             {"score", score}};
                    posts_out << j.dump() << '\n';
                }
            }
        }

        // Legislation: a random subset of background themes per year, with bills that mention them.
        const int first_year = options.article_months.first.year;
        const int last_year = options.article_months.last.year;
        for (int year = first_year; year <= last_year; ++year) {
            std::vector<std::string> themes;
            for (const auto& b : kBackground)
                if (uniform01(rng) < 0.5) themes.emplace_back(b.code);
            const int bills = 4 + static_cast<int>(rng() % 5);
            for (int b = 0; b < bills; ++b) {
                std::string text = "An act relating to";
                for (const auto& t : themes)
                    if (uniform01(rng) < 0.7) text += " " + lower_words(t);
                for (int w = 0; w < 12; ++w) text += " " + kFiller[rng() % kFiller.size()];
                nlohmann::ordered_json j{{"state", state},
                                         {"year", year},
                                         {"doc_id", state + "-" + std::to_string(year) + "-" + std::to_string(b)},
                                         {"text", text}};
                bills_out << j.dump() << '\n';
            }
            nlohmann::ordered_json idx{{"state", state}, {"year", year}, {"themes", themes}, {"bill_count", bills}};
            index_out << idx.dump() << '\n';
        }
    }

    RunConfig config;
    config.states = options.states;
    config.article_months = options.article_months;
    config.post_months = options.post_months;
    config.theme_filter = {kFilterThemes.begin(), kFilterThemes.end()};
    config.legis_first_year = options.article_months.first.year;
    config.legis_last_year = options.article_months.last.year;
    config.seed = options.seed;
    config.threads = 1;
    config.gkg_paths = {"gkg.csv"};
    config.posts_path = "posts.jsonl";
    config.legislation_path = "legislation.jsonl";
    config.legis_index_path = "legis_index.jsonl";
    auto config_out = open_out(dir / "config.toml");
    config_out << to_config_text(config);
    config_out.close();
    return load_config((dir / "config.toml").string());
}

}  // namespace mediaframe

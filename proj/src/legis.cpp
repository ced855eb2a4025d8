#include "mediaframe/legis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace mediaframe {

bool LegislativeIndex::mentioned(int year, const std::string& theme) const {
    const auto it = themes_by_year.find(year);
    return it != themes_by_year.end() && it->second.count(theme) != 0;
}

namespace {

std::set<std::string> lower_words(const std::string& text) {
    std::set<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalpha(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            if (!cur.empty()) out.insert(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.insert(cur);
    return out;
}

}  // namespace

std::set<std::string> keyword_mentions(const std::string& bill_text,
                                       const std::vector<std::string>& themes) {
    const auto words = lower_words(bill_text);
    std::set<std::string> out;
    for (const auto& theme : themes) {
        bool any = false;
        bool all = true;
        for (const auto& part : lower_words(theme)) {
            if (part.size() < 3) continue;
            any = true;
            all = all && words.count(part) != 0;
        }
        if (any && all) out.insert(theme);
    }
    return out;
}

MentionSplit split_by_mention(const YearlyValues& theme_yearly_freq, const LegislativeIndex& index,
                              const std::string& theme, int min_years) {
    MentionSplit split;
    for (int year = index.first_year; year <= index.last_year; ++year) {
        const auto it = theme_yearly_freq.find(year);
        if (it == theme_yearly_freq.end() || is_missing(it->second))
            throw Error(ErrorCode::InvalidArgument,
                        "split_by_mention: no frequency for " + theme + " in " + std::to_string(year));
        if (index.mentioned(year, theme)) {
            split.mentioned.push_back(it->second);
            split.mentioned_years.push_back(year);
        } else {
            split.not_mentioned.push_back(it->second);
            split.not_mentioned_years.push_back(year);
        }
    }
    split.eligible = static_cast<int>(split.mentioned.size()) >= min_years &&
                     static_cast<int>(split.not_mentioned.size()) >= min_years;
    return split;
}

ThemeTTestTable theme_ttest_table(const std::map<std::string, YearlyValues>& series_by_theme,
                                  const LegislativeIndex& index, TTestVariant variant) {
    ThemeTTestTable table;
    for (const auto& [theme, yearly] : series_by_theme) {
        MentionSplit split;
        try {
            split = split_by_mention(yearly, index, theme);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InvalidArgument) throw;
            table.skipped.push_back(theme);
            continue;
        }
        if (!split.eligible) {
            table.skipped.push_back(theme);
            continue;
        }
        ThemeTTestRow row{theme, {}, false};
        try {
            row.test = welch_t_test(split.mentioned, split.not_mentioned, variant);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::BothConstant) throw;
            // Two constant groups: equal means read as no difference, otherwise unbounded t.
            const double ma = split.mentioned.front();
            const double mb = split.not_mentioned.front();
            row.degenerate = true;
            row.test.group_means = {ma, mb};
            row.test.group_sds = {0.0, 0.0};
            row.test.group_ns = {static_cast<int>(split.mentioned.size()),
                                 static_cast<int>(split.not_mentioned.size())};
            row.test.df = static_cast<double>(split.mentioned.size() + split.not_mentioned.size() - 2);
            if (ma == mb) {
                row.test.t_stat = 0.0;
                row.test.p_value = 1.0;
            } else {
                row.test.t_stat = ma > mb ? std::numeric_limits<double>::infinity()
                                          : -std::numeric_limits<double>::infinity();
                row.test.p_value = 0.0;
            }
        }
        table.rows.push_back(std::move(row));
    }
    std::stable_sort(table.rows.begin(), table.rows.end(), [](const auto& a, const auto& b) {
        const double ta = std::abs(a.test.t_stat);
        const double tb = std::abs(b.test.t_stat);
        if (ta != tb) return ta > tb;
        return a.theme < b.theme;
    });
    return table;
}

std::map<std::string, YearlyValues> yearly_theme_frequencies(const std::vector<gkg::GkgRecord>& records,
                                                             int first_year, int last_year) {
    std::map<int, int> totals;
    std::map<std::string, std::map<int, int>> counts;
    for (const auto& r : records) {
        const int year = r.date.year;
        if (year < first_year || year > last_year) continue;
        ++totals[year];
        std::set<std::string> seen;
        for (const auto& t : r.themes)
            if (seen.insert(t.code).second) ++counts[t.code][year];
    }
    std::map<std::string, YearlyValues> out;
    for (const auto& [theme, by_year] : counts) {
        auto& series = out[theme];
        for (int year = first_year; year <= last_year; ++year) {
            const auto total = totals.find(year);
            if (total == totals.end()) {
                series[year] = kMissing;
                continue;
            }
            const auto c = by_year.find(year);
            series[year] = (c == by_year.end() ? 0.0 : c->second) / static_cast<double>(total->second);
        }
    }
    return out;
}

std::map<int, int> yearly_article_counts(const std::vector<gkg::GkgRecord>& records, int first_year,
                                         int last_year) {
    std::map<int, int> out;
    for (int year = first_year; year <= last_year; ++year) out[year] = 0;
    for (const auto& r : records)
        if (r.date.year >= first_year && r.date.year <= last_year) ++out[r.date.year];
    return out;
}

OlsResult salience_regression(const std::map<int, int>& article_count_by_year,
                              const std::map<int, int>& bill_count_by_year) {
    std::vector<std::pair<double, double>> pairs;
    for (const auto& [year, articles] : article_count_by_year)
        if (const auto it = bill_count_by_year.find(year); it != bill_count_by_year.end())
            pairs.emplace_back(articles, it->second);
    if (pairs.size() < 4)
        throw Error(ErrorCode::InsufficientObservations,
                    "salience_regression: " + std::to_string(pairs.size()) + " paired years");
    Eigen::MatrixXd x(pairs.size(), 1);
    Eigen::VectorXd y(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        x(static_cast<Eigen::Index>(i), 0) = pairs[i].first;
        y(static_cast<Eigen::Index>(i)) = pairs[i].second;
    }
    return ols_fit(x, y);
}

}  // namespace mediaframe

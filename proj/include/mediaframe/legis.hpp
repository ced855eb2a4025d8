#ifndef MEDIAFRAME_LEGIS_HPP
#define MEDIAFRAME_LEGIS_HPP

// Yearly linkage between article themes and state legislation.

#include "mediaframe/econometrics.hpp"
#include "mediaframe/gkg.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace mediaframe {

struct LegislativeIndex {
    std::string state;
    int first_year = 2015;
    int last_year = 2023;
    std::map<int, std::set<std::string>> themes_by_year;
    std::map<int, int> bill_count;

    bool mentioned(int year, const std::string& theme) const;
};

/// Theme matching by bill text: every underscore-separated word (3+ letters, lowercased)
/// of the theme code occurs in the text. Alternative to LDA theme mapping.
std::set<std::string> keyword_mentions(const std::string& bill_text,
                                       const std::vector<std::string>& themes);

using YearlyValues = std::map<int, double>;

struct MentionSplit {
    std::vector<double> mentioned;
    std::vector<double> not_mentioned;
    std::vector<int> mentioned_years;
    std::vector<int> not_mentioned_years;
    bool eligible = false;  // at least `min_years` in each group
};

/// Partitions yearly frequencies of `theme` over the index's year range. Every year of the
/// range must carry a value (InvalidArgument otherwise).
MentionSplit split_by_mention(const YearlyValues& theme_yearly_freq, const LegislativeIndex& index,
                              const std::string& theme, int min_years = 2);

struct ThemeTTestRow {
    std::string theme;
    TTestResult test;
    bool degenerate = false;  // both groups constant
};

struct ThemeTTestTable {
    std::vector<ThemeTTestRow> rows;  // sorted by |t| descending, then theme
    std::vector<std::string> skipped;
};

ThemeTTestTable theme_ttest_table(const std::map<std::string, YearlyValues>& series_by_theme,
                                  const LegislativeIndex& index,
                                  TTestVariant variant = TTestVariant::Welch);

/// Fraction of articles per year mentioning each theme (once per article).
std::map<std::string, YearlyValues> yearly_theme_frequencies(const std::vector<gkg::GkgRecord>& records,
                                                             int first_year, int last_year);

std::map<int, int> yearly_article_counts(const std::vector<gkg::GkgRecord>& records, int first_year,
                                         int last_year);

/// OLS of bill count on article count over the years present in both maps.
/// Throws InsufficientObservations below 4 paired years.
OlsResult salience_regression(const std::map<int, int>& article_count_by_year,
                              const std::map<int, int>& bill_count_by_year);

}  // namespace mediaframe

#endif  // MEDIAFRAME_LEGIS_HPP

#ifndef MEDIAFRAME_SERIES_HPP
#define MEDIAFRAME_SERIES_HPP

#include "mediaframe/core.hpp"
#include "mediaframe/gkg.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mediaframe {

enum class Polarity { Pos, Neg, Tie };

std::string_view to_string(Polarity p);  // "POS", "NEG", "TIE"
Polarity polarity_from_string(std::string_view s);

/// Supplies (positive, negative) emotion scores for an article.
class SentimentLexicon {
public:
    virtual ~SentimentLexicon() = default;
    virtual std::pair<double, double> scores(const gkg::GkgRecord& record) const = 0;
};

/// Reads positive/negative scores from the record's tone block; no tone means a tie.
class ToneLexicon final : public SentimentLexicon {
public:
    std::pair<double, double> scores(const gkg::GkgRecord& record) const override;
};

Polarity classify_polarity(const gkg::GkgRecord& record, const SentimentLexicon& lexicon);

struct TopicSentimentSeries {
    std::string state;
    std::string theme;
    Polarity polarity = Polarity::Pos;
    MonthlySeries series;

    /// `THEME_POS` / `THEME_NEG`, the label used in screening tables.
    std::string topic() const;
};

struct MonthlyCounts {
    YearMonth month;
    int total_articles = 0;
    std::map<std::pair<std::string, Polarity>, int> counts;
};

struct SeriesTable {
    std::vector<TopicSentimentSeries> series;  // sorted by theme, POS before NEG
    std::vector<MonthlyCounts> counts;         // one per month of the range
};

/// Relative frequency of each (theme, polarity) per month. An article counts once per theme;
/// ties add to the monthly total only; records outside the range are ignored.
SeriesTable build_series(const std::vector<gkg::GkgRecord>& records, const MonthRange& range,
                         const std::string& state, const SentimentLexicon& lexicon);

/// Mean over non-missing months; NaN when every month is missing.
double mean_present(const Eigen::Ref<const Eigen::VectorXd>& values);

/// Drops series whose mean frequency is strictly below `threshold`.
std::vector<TopicSentimentSeries> prune_infrequent(std::vector<TopicSentimentSeries> series,
                                                   double threshold = 0.015);

struct ScoredPost {
    YearMonth month;
    int score = 3;
};

struct SentimentSeries {
    std::string state;
    MonthlySeries series;
};

/// Monthly mean of 1..5 scores. Throws ScoreOutOfRange.
SentimentSeries aggregate_posts(const std::vector<ScoredPost>& posts, const MonthRange& range,
                                const std::string& state = {});

/// CSV with header `state,theme,polarity,month,value`; missing values are empty cells.
void write_series_csv(std::ostream& out, const std::vector<TopicSentimentSeries>& series);

}  // namespace mediaframe

#endif  // MEDIAFRAME_SERIES_HPP

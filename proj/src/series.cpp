#include "mediaframe/series.hpp"

#include <algorithm>
#include <ostream>
#include <set>

namespace mediaframe {

std::string_view to_string(Polarity p) {
    switch (p) {
        case Polarity::Pos: return "POS";
        case Polarity::Neg: return "NEG";
        case Polarity::Tie: return "TIE";
    }
    return "TIE";
}

Polarity polarity_from_string(std::string_view s) {
    if (s == "POS") return Polarity::Pos;
    if (s == "NEG") return Polarity::Neg;
    if (s == "TIE") return Polarity::Tie;
    throw Error(ErrorCode::InvalidArgument, "unknown polarity '" + std::string(s) + "'");
}

std::pair<double, double> ToneLexicon::scores(const gkg::GkgRecord& record) const {
    if (!record.tone) return {0.0, 0.0};
    return {record.tone->positive_score, record.tone->negative_score};
}

Polarity classify_polarity(const gkg::GkgRecord& record, const SentimentLexicon& lexicon) {
    const auto [pos, neg] = lexicon.scores(record);
    if (pos > neg) return Polarity::Pos;
    if (neg > pos) return Polarity::Neg;
    return Polarity::Tie;
}

std::string TopicSentimentSeries::topic() const {
    return theme + "_" + std::string(to_string(polarity));
}

SeriesTable build_series(const std::vector<gkg::GkgRecord>& records, const MonthRange& range,
                         const std::string& state, const SentimentLexicon& lexicon) {
    if (range.empty()) throw Error(ErrorCode::EmptyRange, "build_series: empty month range");

    SeriesTable table;
    table.counts.resize(range.size());
    for (int i = 0; i < range.size(); ++i) table.counts[i].month = range.first.plus(i);

    std::set<std::pair<std::string, Polarity>> keys;
    for (const auto& r : records) {
        const YearMonth m = r.date.year_month();
        if (!range.contains(m)) continue;
        auto& mc = table.counts[range.offset(m)];
        ++mc.total_articles;
        const Polarity pol = classify_polarity(r, lexicon);
        if (pol == Polarity::Tie) continue;
        std::set<std::string> seen;
        for (const auto& t : r.themes) {
            if (!seen.insert(t.code).second) continue;
            ++mc.counts[{t.code, pol}];
            keys.insert({t.code, pol});
        }
    }

    for (const auto& key : keys) {
        TopicSentimentSeries s{state, key.first, key.second,
                               {range.first, Eigen::VectorXd::Constant(range.size(), kMissing)}};
        for (int i = 0; i < range.size(); ++i) {
            const auto& mc = table.counts[i];
            if (mc.total_articles == 0) continue;
            const auto it = mc.counts.find(key);
            const int c = it == mc.counts.end() ? 0 : it->second;
            s.series.values(i) = double(c) / double(mc.total_articles);
        }
        table.series.push_back(std::move(s));
    }
    return table;
}

double mean_present(const Eigen::Ref<const Eigen::VectorXd>& values) {
    double sum = 0.0;
    int n = 0;
    for (double v : values) {
        if (is_missing(v)) continue;
        sum += v;
        ++n;
    }
    return n == 0 ? kMissing : sum / n;
}

std::vector<TopicSentimentSeries> prune_infrequent(std::vector<TopicSentimentSeries> series,
                                                   double threshold) {
    std::erase_if(series, [&](const TopicSentimentSeries& s) {
        const double m = mean_present(s.series.values);
        return is_missing(m) || m < threshold;
    });
    return series;
}

SentimentSeries aggregate_posts(const std::vector<ScoredPost>& posts, const MonthRange& range,
                                const std::string& state) {
    if (range.empty()) throw Error(ErrorCode::EmptyRange, "aggregate_posts: empty month range");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(range.size());
    Eigen::VectorXi n = Eigen::VectorXi::Zero(range.size());
    for (const auto& p : posts) {
        if (p.score < 1 || p.score > 5)
            throw Error(ErrorCode::ScoreOutOfRange, "score " + std::to_string(p.score));
        if (!range.contains(p.month)) continue;
        const int i = range.offset(p.month);
        sum(i) += p.score;
        ++n(i);
    }
    SentimentSeries out{state, {range.first, Eigen::VectorXd::Constant(range.size(), kMissing)}};
    for (int i = 0; i < range.size(); ++i)
        if (n(i) > 0) out.series.values(i) = sum(i) / n(i);
    return out;
}

void write_series_csv(std::ostream& out, const std::vector<TopicSentimentSeries>& series) {
    out << "state,theme,polarity,month,value\n";
    for (const auto& s : series)
        for (Eigen::Index i = 0; i < s.series.size(); ++i)
            out << s.state << ',' << s.theme << ',' << to_string(s.polarity) << ','
                << s.series.month_at(i).str() << ',' << format_real(s.series.values(i)) << '\n';
}

}  // namespace mediaframe

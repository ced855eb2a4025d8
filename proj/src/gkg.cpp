#include "mediaframe/gkg.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

namespace mediaframe::gkg {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t begin = 0;
    while (true) {
        const std::size_t pos = s.find(sep, begin);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(begin));
            return out;
        }
        out.push_back(s.substr(begin, pos - begin));
        begin = pos + 1;
    }
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
    return parse_number(s, out) && std::isfinite(out);
}

std::string shortest(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : days[m - 1];
}

bool parse_timestamp(std::string_view s, Timestamp& ts) {
    if (s.size() != 14) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (s[i] - '0');
        return v;
    };
    ts = {num(0, 4), num(4, 2), num(6, 2), num(8, 2), num(10, 2), num(12, 2)};
    return ts.month >= 1 && ts.month <= 12 && ts.day >= 1 &&
           ts.day <= days_in_month(ts.year, ts.month) && ts.hour < 24 && ts.minute < 60 &&
           ts.second < 61;
}

std::optional<ThemeMention> parse_theme(std::string_view item) {
    const auto comma = item.rfind(',');
    if (comma == std::string_view::npos || comma == 0) return std::nullopt;
    ThemeMention t;
    t.code = std::string(item.substr(0, comma));
    if (!parse_number(item.substr(comma + 1), t.offset) || t.offset < 0) return std::nullopt;
    return t;
}

std::optional<Location> parse_location(std::string_view item) {
    const auto parts = split(item, '#');
    if (parts.size() < 8) return std::nullopt;
    Location loc;
    if (!parse_number(parts[0], loc.loc_type)) return std::nullopt;
    loc.full_name = std::string(parts[1]);
    loc.country_code = std::string(parts[2]);
    loc.adm1_code = std::string(parts[3]);
    loc.adm2_code = std::string(parts[4]);
    if (!parse_double(parts[5], loc.latitude) || !parse_double(parts[6], loc.longitude))
        return std::nullopt;
    loc.feature_id = std::string(parts[7]);
    if (parts.size() >= 9 && !parts[8].empty()) {
        if (!parse_number(parts[8], loc.char_offset) || loc.char_offset < 0) return std::nullopt;
    }
    return loc;
}

std::optional<ToneBlock> parse_tone(std::string_view field) {
    const auto parts = split(field, ',');
    if (parts.size() < 7) return std::nullopt;
    ToneBlock tb;
    double* reals[] = {&tb.tone,     &tb.positive_score,   &tb.negative_score,
                       &tb.polarity, &tb.activity_density, &tb.self_group_density};
    for (std::size_t i = 0; i < 6; ++i)
        if (!parse_double(parts[i], *reals[i])) return std::nullopt;
    double wc = 0.0;
    if (!parse_double(parts[6], wc) || wc < 0 || wc != std::floor(wc)) return std::nullopt;
    tb.word_count = static_cast<int>(wc);
    if (tb.positive_score < 0 || tb.negative_score < 0) return std::nullopt;
    return tb;
}

}  // namespace

std::string Timestamp::str() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d%02d%02d%02d%02d%02d", year, month, day, hour, minute,
                  second);
    return buf;
}

bool GkgRecord::has_theme(std::string_view code) const {
    return std::any_of(themes.begin(), themes.end(),
                       [&](const ThemeMention& t) { return t.code == code; });
}

GkgRecord parse_gkg_record(std::string_view line, ParseStats* stats) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) throw Error(ErrorCode::MalformedRecord, "empty line");
    const auto fields = split(line, '\t');
    if (fields.size() < kFieldCount)
        throw Error(ErrorCode::MalformedRecord,
                    "expected " + std::to_string(kFieldCount) + " fields, got " +
                        std::to_string(fields.size()));

    GkgRecord rec;
    rec.record_id = std::string(fields[column::kRecordId]);
    if (!parse_timestamp(fields[column::kDate], rec.date))
        throw Error(ErrorCode::MalformedRecord,
                    "unparseable date '" + std::string(fields[column::kDate]) + "'");
    rec.source_name = std::string(fields[column::kSourceCommonName]);

    ParseStats local;
    ParseStats& st = stats ? *stats : local;

    if (!fields[column::kEnhancedThemes].empty()) {
        for (auto item : split(fields[column::kEnhancedThemes], ';')) {
            if (item.empty()) continue;  // trailing separator
            if (auto t = parse_theme(item))
                rec.themes.push_back(std::move(*t));
            else
                ++st.dropped_themes;
        }
    }
    if (!fields[column::kEnhancedLocations].empty()) {
        for (auto item : split(fields[column::kEnhancedLocations], ';')) {
            if (item.empty()) continue;
            if (auto loc = parse_location(item))
                rec.locations.push_back(std::move(*loc));
            else
                ++st.dropped_locations;
        }
    }
    if (!fields[column::kTone].empty()) {
        rec.tone = parse_tone(fields[column::kTone]);
        if (!rec.tone) {
            ++st.dropped_tones;
        } else if (std::abs(rec.tone->tone -
                            (rec.tone->positive_score - rec.tone->negative_score)) > 0.01) {
            ++st.tone_mismatches;
        }
    }
    return rec;
}

std::string to_gkg_line(const GkgRecord& r) {
    std::vector<std::string> f(kFieldCount);
    f[column::kRecordId] = r.record_id;
    f[column::kDate] = r.date.str();
    f[column::kSourceCommonName] = r.source_name;
    for (std::size_t i = 0; i < r.themes.size(); ++i) {
        if (i) f[column::kEnhancedThemes] += ';';
        f[column::kEnhancedThemes] += r.themes[i].code + "," + std::to_string(r.themes[i].offset);
    }
    for (std::size_t i = 0; i < r.locations.size(); ++i) {
        const auto& l = r.locations[i];
        if (i) f[column::kEnhancedLocations] += ';';
        f[column::kEnhancedLocations] += std::to_string(l.loc_type) + "#" + l.full_name + "#" +
                                         l.country_code + "#" + l.adm1_code + "#" + l.adm2_code +
                                         "#" + shortest(l.latitude) + "#" + shortest(l.longitude) +
                                         "#" + l.feature_id + "#" + std::to_string(l.char_offset);
    }
    if (r.tone) {
        const auto& t = *r.tone;
        f[column::kTone] = shortest(t.tone) + "," + shortest(t.positive_score) + "," +
                           shortest(t.negative_score) + "," + shortest(t.polarity) + "," +
                           shortest(t.activity_density) + "," + shortest(t.self_group_density) +
                           "," + std::to_string(t.word_count);
    }
    std::string out;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i) out += '\t';
        out += f[i];
    }
    return out;
}

ReadResult read_gkg(std::istream& in, const std::string& name) {
    ReadResult result;
    std::string line;
    while (std::getline(in, line)) {
        ++result.lines;
        try {
            result.records.push_back(parse_gkg_record(line, &result.stats));
        } catch (const Error& e) {
            result.skipped.push_back({name, result.lines, e.what()});
        }
    }
    return result;
}

ReadResult read_gkg_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    return read_gkg(in, path);
}

std::string format_skip_report(const std::vector<SkipEntry>& skipped, std::size_t total_lines) {
    std::ostringstream os;
    for (const auto& s : skipped) os << s.file << ':' << s.line << ": " << s.reason << '\n';
    os << "skipped " << skipped.size() << " of " << total_lines << " lines\n";
    return os.str();
}

bool mentions_state(const GkgRecord& record, std::string_view state) {
    return std::any_of(record.locations.begin(), record.locations.end(), [&](const Location& l) {
        return l.adm1_code.size() == 2 + state.size() && l.adm1_code.starts_with("US") &&
               std::string_view(l.adm1_code).substr(2) == state;
    });
}

std::vector<GkgRecord> filter_articles(const std::vector<GkgRecord>& records,
                                       const std::set<std::string>& theme_filter,
                                       std::string_view state) {
    if (theme_filter.empty()) throw Error(ErrorCode::InvalidArgument, "empty theme filter");
    if (state.size() != 2) throw Error(ErrorCode::InvalidArgument, "state code must be 2 letters");
    std::vector<GkgRecord> out;
    for (const auto& r : records) {
        const bool theme_hit = std::any_of(r.themes.begin(), r.themes.end(), [&](const auto& t) {
            return theme_filter.count(t.code) != 0;
        });
        if (theme_hit && mentions_state(r, state)) out.push_back(r);
    }
    return out;
}

MonthlySeries articles_per_source(const std::vector<GkgRecord>& records, const MonthRange& range) {
    if (range.empty()) throw Error(ErrorCode::EmptyRange, "articles_per_source");
    std::vector<std::set<std::string>> sources(range.size());
    std::vector<int> counts(range.size(), 0);
    for (const auto& r : records) {
        const YearMonth m = r.date.year_month();
        if (!range.contains(m)) continue;
        const int i = range.offset(m);
        ++counts[i];
        sources[i].insert(r.source_name);
    }
    MonthlySeries out{range.first, Eigen::VectorXd::Constant(range.size(), kMissing)};
    for (int i = 0; i < range.size(); ++i)
        if (!sources[i].empty()) out.values(i) = double(counts[i]) / double(sources[i].size());
    return out;
}

}  // namespace mediaframe::gkg

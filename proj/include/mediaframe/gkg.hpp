#ifndef MEDIAFRAME_GKG_HPP
#define MEDIAFRAME_GKG_HPP

// Reader for GDELT Global Knowledge Graph 2.1 rows (tab separated, 27 columns).

#include "mediaframe/core.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mediaframe::gkg {

inline constexpr std::size_t kFieldCount = 27;

/// Column positions inside a GKG 2.1 row.
namespace column {
inline constexpr std::size_t kRecordId = 0;
inline constexpr std::size_t kDate = 1;
inline constexpr std::size_t kSourceCommonName = 3;
inline constexpr std::size_t kEnhancedThemes = 8;
inline constexpr std::size_t kEnhancedLocations = 10;
inline constexpr std::size_t kTone = 15;
}  // namespace column

struct Timestamp {
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;

    YearMonth year_month() const { return {year, month}; }
    std::string str() const;  // YYYYMMDDHHMMSS
    bool operator==(const Timestamp&) const = default;
};

struct ThemeMention {
    std::string code;
    int offset = 0;
    bool operator==(const ThemeMention&) const = default;
};

struct Location {
    int loc_type = 0;
    std::string full_name;
    std::string country_code;
    std::string adm1_code;
    std::string adm2_code;
    double latitude = 0.0;
    double longitude = 0.0;
    std::string feature_id;
    int char_offset = 0;
    bool operator==(const Location&) const = default;
};

struct ToneBlock {
    double tone = 0.0;
    double positive_score = 0.0;
    double negative_score = 0.0;
    double polarity = 0.0;
    double activity_density = 0.0;
    double self_group_density = 0.0;
    int word_count = 0;
    bool operator==(const ToneBlock&) const = default;
};

struct GkgRecord {
    std::string record_id;
    Timestamp date;
    std::string source_name;
    std::vector<ThemeMention> themes;  // input order preserved
    std::vector<Location> locations;
    std::optional<ToneBlock> tone;     // empty when the tone block was malformed

    bool has_theme(std::string_view code) const;
    bool operator==(const GkgRecord&) const = default;
};

/// Sub-element problems found while parsing rows that were otherwise accepted.
struct ParseStats {
    std::size_t dropped_themes = 0;
    std::size_t dropped_locations = 0;
    std::size_t dropped_tones = 0;
    std::size_t tone_mismatches = 0;  // tone differs from positive - negative beyond rounding
};

/// Parses one row. Throws Error(MalformedRecord) on a short row or a bad date.
GkgRecord parse_gkg_record(std::string_view line, ParseStats* stats = nullptr);

/// Writes the retained fields back into a 27-column row; other columns stay empty.
std::string to_gkg_line(const GkgRecord& record);

struct SkipEntry {
    std::string file;
    std::size_t line = 0;  // 1-based
    std::string reason;
};

struct ReadResult {
    std::vector<GkgRecord> records;
    std::vector<SkipEntry> skipped;
    ParseStats stats;
    std::size_t lines = 0;
};

/// Reads every line; malformed rows are skipped and reported, never fatal.
ReadResult read_gkg(std::istream& in, const std::string& name);
ReadResult read_gkg_file(const std::string& path);

/// Plain-text skip report: one `file:line: reason` per skipped row plus a summary line.
std::string format_skip_report(const std::vector<SkipEntry>& skipped, std::size_t total_lines);

/// Location test used by the state filter: ADM1 code equals `US` + state.
bool mentions_state(const GkgRecord& record, std::string_view state);

/// Keeps records carrying any filter theme and tagged with the state.
std::vector<GkgRecord> filter_articles(const std::vector<GkgRecord>& records,
                                       const std::set<std::string>& theme_filter,
                                       std::string_view state);

/// Articles per distinct source for each month of `range`; missing where no source.
MonthlySeries articles_per_source(const std::vector<GkgRecord>& records, const MonthRange& range);

}  // namespace mediaframe::gkg

#endif  // MEDIAFRAME_GKG_HPP

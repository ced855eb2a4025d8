#ifndef MEDIAFRAME_CORE_HPP
#define MEDIAFRAME_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mediaframe {

enum class ErrorCode {
    InvalidArgument,
    MalformedRecord,
    EmptyRange,
    ScoreOutOfRange,
    SeriesTooShort,
    ConstantSeries,
    MissingValues,
    InsufficientObservations,
    ZeroVariance,
    RankDeficient,
    SampleTooSmall,
    BothConstant,
    DomainError,
    EmptyMatrix,
    EmptyCorpus,
    InsufficientCodings,
    LengthMismatch,
    BackendUnavailable,
    IoError,
    ConfigError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Missing observations are carried as quiet NaN inside Eigen vectors.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Calendar month, ordered.
struct YearMonth {
    int year = 1970;
    int month = 1;  // 1..12

    auto operator<=>(const YearMonth&) const = default;

    /// Months since 0000-01, handy for offsets.
    int index() const { return year * 12 + (month - 1); }
    static YearMonth from_index(int idx) { return {idx / 12, idx % 12 + 1}; }

    YearMonth plus(int months) const { return from_index(index() + months); }

    /// Parses `YYYY-MM`, `YYYYMM`, or any ISO date starting with `YYYY-MM`.
    static YearMonth parse(std::string_view text);
    std::string str() const;
};

inline int months_between(YearMonth a, YearMonth b) { return b.index() - a.index(); }

/// Inclusive month range.
struct MonthRange {
    YearMonth first;
    YearMonth last;

    bool empty() const { return last < first; }
    int size() const { return empty() ? 0 : months_between(first, last) + 1; }
    bool contains(YearMonth m) const { return !(m < first) && !(last < m); }
    int offset(YearMonth m) const { return months_between(first, m); }

    bool operator==(const MonthRange&) const = default;
};

MonthRange intersect(const MonthRange& a, const MonthRange& b);

/// A monthly series anchored at `start`; NaN marks a missing month.
struct MonthlySeries {
    YearMonth start;
    Eigen::VectorXd values;

    Eigen::Index size() const { return values.size(); }
    YearMonth month_at(Eigen::Index i) const { return start.plus(static_cast<int>(i)); }
    MonthRange range() const {
        return {start, start.plus(static_cast<int>(values.size()) - 1)};
    }
};

/// Cuts `series` down to `range`; months outside the series become missing.
MonthlySeries restrict_to(const MonthlySeries& series, const MonthRange& range);

/// Stable 64-bit FNV-1a, used for seeding and hashing configs.
std::uint64_t fnv1a(std::string_view text, std::uint64_t basis = 14695981039346656037ULL);

/// SplitMix64 finalizer; derives independent stream seeds from a root seed.
std::uint64_t mix_seed(std::uint64_t root, std::uint64_t salt);

/// Uniform double in [0,1) from the top 53 bits of a 64-bit draw.
template <class Engine>
double uniform01(Engine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller; portable across standard libraries.
template <class Engine>
double standard_normal(Engine& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Formats a real with 6 significant digits; missing prints as an empty cell.
std::string format_real(double v);

}  // namespace mediaframe

#endif  // MEDIAFRAME_CORE_HPP

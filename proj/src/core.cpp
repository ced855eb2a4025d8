#include "mediaframe/core.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace mediaframe {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::EmptyRange: return "EmptyRange";
        case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
        case ErrorCode::SeriesTooShort: return "SeriesTooShort";
        case ErrorCode::ConstantSeries: return "ConstantSeries";
        case ErrorCode::MissingValues: return "MissingValues";
        case ErrorCode::InsufficientObservations: return "InsufficientObservations";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::SampleTooSmall: return "SampleTooSmall";
        case ErrorCode::BothConstant: return "BothConstant";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::InsufficientCodings: return "InsufficientCodings";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

namespace {

bool parse_digits(std::string_view s, int& out) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

YearMonth YearMonth::parse(std::string_view text) {
    int year = 0;
    int month = 0;
    bool ok = false;
    if (text.size() >= 7 && text[4] == '-') {
        ok = parse_digits(text.substr(0, 4), year) && parse_digits(text.substr(5, 2), month);
    } else if (text.size() >= 6) {
        ok = parse_digits(text.substr(0, 4), year) && parse_digits(text.substr(4, 2), month);
    }
    if (!ok || month < 1 || month > 12)
        throw Error(ErrorCode::InvalidArgument, "bad year-month '" + std::string(text) + "'");
    return {year, month};
}

std::string YearMonth::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
}

MonthRange intersect(const MonthRange& a, const MonthRange& b) {
    return {std::max(a.first, b.first), std::min(a.last, b.last)};
}

MonthlySeries restrict_to(const MonthlySeries& series, const MonthRange& range) {
    MonthlySeries out{range.first, Eigen::VectorXd::Constant(range.size(), kMissing)};
    for (int i = 0; i < range.size(); ++i) {
        const int src = months_between(series.start, range.first.plus(i));
        if (src >= 0 && src < series.values.size()) out.values(i) = series.values(src);
    }
    return out;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t salt) {
    std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::string format_real(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";  // folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace mediaframe

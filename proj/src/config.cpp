#include "mediaframe/config.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace mediaframe {

namespace {

struct Value {
    enum class Kind { String, Number, Bool, Array } kind = Kind::String;
    std::string text;
    double number = 0.0;
    bool flag = false;
    std::vector<Value> items;
};

class ValueParser {
public:
    explicit ValueParser(std::string_view s) : s_(s) {}

    Value parse_all() {
        Value v = parse();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing characters");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw Error(ErrorCode::ConfigError, why + " in value '" + std::string(s_) + "'");
    }
    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }
    Value parse() {
        skip_ws();
        if (pos_ >= s_.size()) fail("missing value");
        const char c = s_[pos_];
        if (c == '"') return parse_string();
        if (c == '[') return parse_array();
        return parse_bare();
    }
    Value parse_string() {
        Value v;
        ++pos_;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c == '\\' && pos_ < s_.size()) {
                const char e = s_[pos_++];
                c = e == 'n' ? '\n' : e == 't' ? '\t' : e;
            }
            v.text.push_back(c);
        }
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        return v;
    }
    Value parse_array() {
        Value v;
        v.kind = Value::Kind::Array;
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return v;
        }
        while (true) {
            v.items.push_back(parse());
            skip_ws();
            if (pos_ >= s_.size()) fail("unterminated array");
            if (s_[pos_] == ',') {
                ++pos_;
                skip_ws();
                if (pos_ < s_.size() && s_[pos_] == ']') {
                    ++pos_;
                    return v;
                }
                continue;
            }
            if (s_[pos_] == ']') {
                ++pos_;
                return v;
            }
            fail("expected ',' or ']'");
        }
    }
    Value parse_bare() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != ' ' &&
               s_[pos_] != '\t')
            ++pos_;
        const std::string_view tok = s_.substr(start, pos_ - start);
        Value v;
        v.text = std::string(tok);
        if (tok == "true" || tok == "false") {
            v.kind = Value::Kind::Bool;
            v.flag = tok == "true";
            return v;
        }
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v.number);
        if (ec != std::errc() || ptr != tok.data() + tok.size()) fail("not a number or boolean");
        v.kind = Value::Kind::Number;
        return v;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

std::string_view strip(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Cuts a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\\' && in_string) {
            ++i;
            continue;
        }
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

std::string as_string(const Value& v, const std::string& key) {
    if (v.kind != Value::Kind::String) throw Error(ErrorCode::ConfigError, key + " must be a string");
    return v.text;
}
double as_number(const Value& v, const std::string& key) {
    if (v.kind != Value::Kind::Number) throw Error(ErrorCode::ConfigError, key + " must be a number");
    return v.number;
}
int as_int(const Value& v, const std::string& key) {
    const double d = as_number(v, key);
    if (d != std::floor(d)) throw Error(ErrorCode::ConfigError, key + " must be an integer");
    return static_cast<int>(d);
}
bool as_bool(const Value& v, const std::string& key) {
    if (v.kind != Value::Kind::Bool) throw Error(ErrorCode::ConfigError, key + " must be true or false");
    return v.flag;
}
std::vector<std::string> as_strings(const Value& v, const std::string& key) {
    if (v.kind != Value::Kind::Array) return {as_string(v, key)};
    std::vector<std::string> out;
    for (const auto& item : v.items) out.push_back(as_string(item, key));
    return out;
}
std::vector<int> as_ints(const Value& v, const std::string& key) {
    if (v.kind != Value::Kind::Array) return {as_int(v, key)};
    std::vector<int> out;
    for (const auto& item : v.items) out.push_back(as_int(item, key));
    return out;
}
MonthRange as_months(const Value& v, const std::string& key) {
    const auto parts = as_strings(v, key);
    if (parts.size() != 2) throw Error(ErrorCode::ConfigError, key + " must be [first, last]");
    return {YearMonth::parse(parts[0]), YearMonth::parse(parts[1])};
}

struct Context {
    std::filesystem::path base;
    std::string path(const std::string& p) const {
        if (p.empty()) return p;
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? p : (base / fp).lexically_normal().string();
    }
};

using Setter = std::function<void(RunConfig&, const Value&, const Context&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> m;
        m["seed"] = [](RunConfig& c, const Value& v, const Context&) {
            as_number(v, "seed");
            std::uint64_t seed = 0;
            const auto [ptr, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), seed);
            if (ec != std::errc() || ptr != v.text.data() + v.text.size())
                throw Error(ErrorCode::ConfigError, "seed must be a non-negative integer");
            c.seed = seed;
        };
        m["threads"] = [](RunConfig& c, const Value& v, const Context&) { c.threads = as_int(v, "threads"); };
        m["states"] = [](RunConfig& c, const Value& v, const Context&) { c.states = as_strings(v, "states"); };
        m["months.articles"] = [](RunConfig& c, const Value& v, const Context&) {
            c.article_months = as_months(v, "months.articles");
        };
        m["months.posts"] = [](RunConfig& c, const Value& v, const Context&) {
            c.post_months = as_months(v, "months.posts");
        };
        m["filter.themes"] = [](RunConfig& c, const Value& v, const Context&) {
            const auto t = as_strings(v, "filter.themes");
            c.theme_filter = {t.begin(), t.end()};
        };
        m["screening.prune_threshold"] = [](RunConfig& c, const Value& v, const Context&) {
            c.prune_threshold = as_number(v, "screening.prune_threshold");
        };
        m["screening.lags"] = [](RunConfig& c, const Value& v, const Context&) { c.lags = as_ints(v, "screening.lags"); };
        m["screening.significance"] = [](RunConfig& c, const Value& v, const Context&) {
            c.significance = as_number(v, "screening.significance");
        };
        m["screening.top"] = [](RunConfig& c, const Value& v, const Context&) { c.screen_top = as_int(v, "screening.top"); };
        m["screening.bh_correction"] = [](RunConfig& c, const Value& v, const Context&) {
            c.bh_correction = as_bool(v, "screening.bh_correction");
        };
        m["screening.max_gaps"] = [](RunConfig& c, const Value& v, const Context&) {
            c.max_gaps = as_int(v, "screening.max_gaps");
        };
        m["var.variance_target"] = [](RunConfig& c, const Value& v, const Context&) {
            c.variance_target = as_number(v, "var.variance_target");
        };
        m["var.features"] = [](RunConfig& c, const Value& v, const Context&) { c.var_features = as_int(v, "var.features"); };
        m["var.redundancy"] = [](RunConfig& c, const Value& v, const Context&) {
            c.redundancy = as_number(v, "var.redundancy");
        };
        m["lda.topics"] = [](RunConfig& c, const Value& v, const Context&) { c.lda_topics = as_int(v, "lda.topics"); };
        m["lda.iterations"] = [](RunConfig& c, const Value& v, const Context&) {
            c.lda_iterations = as_int(v, "lda.iterations");
        };
        m["lda.alpha"] = [](RunConfig& c, const Value& v, const Context&) { c.lda_alpha = as_number(v, "lda.alpha"); };
        m["lda.beta"] = [](RunConfig& c, const Value& v, const Context&) { c.lda_beta = as_number(v, "lda.beta"); };
        m["lda.top_words"] = [](RunConfig& c, const Value& v, const Context&) {
            c.lda_top_words = as_int(v, "lda.top_words");
        };
        m["legis.first_year"] = [](RunConfig& c, const Value& v, const Context&) {
            c.legis_first_year = as_int(v, "legis.first_year");
        };
        m["legis.last_year"] = [](RunConfig& c, const Value& v, const Context&) {
            c.legis_last_year = as_int(v, "legis.last_year");
        };
        m["legis.pooled_ttest"] = [](RunConfig& c, const Value& v, const Context&) {
            c.pooled_ttest = as_bool(v, "legis.pooled_ttest");
        };
        m["legis.keyword_mentions"] = [](RunConfig& c, const Value& v, const Context&) {
            c.keyword_mentions = as_bool(v, "legis.keyword_mentions");
        };
        m["legis.theme_candidates"] = [](RunConfig& c, const Value& v, const Context&) {
            c.theme_candidates = as_int(v, "legis.theme_candidates");
        };
        m["legis.candidate_themes"] = [](RunConfig& c, const Value& v, const Context&) {
            c.candidate_themes = as_strings(v, "legis.candidate_themes");
        };
        m["annotate.backend_command"] = [](RunConfig& c, const Value& v, const Context&) {
            c.backend_command = as_string(v, "annotate.backend_command");
        };
        m["annotate.max_in_flight"] = [](RunConfig& c, const Value& v, const Context&) {
            c.max_in_flight = as_int(v, "annotate.max_in_flight");
        };
        m["paths.gkg"] = [](RunConfig& c, const Value& v, const Context& ctx) {
            c.gkg_paths.clear();
            for (const auto& p : as_strings(v, "paths.gkg")) c.gkg_paths.push_back(ctx.path(p));
        };
        m["paths.posts"] = [](RunConfig& c, const Value& v, const Context& ctx) {
            c.posts_path = ctx.path(as_string(v, "paths.posts"));
        };
        m["paths.legislation"] = [](RunConfig& c, const Value& v, const Context& ctx) {
            c.legislation_path = ctx.path(as_string(v, "paths.legislation"));
        };
        m["paths.legis_index"] = [](RunConfig& c, const Value& v, const Context& ctx) {
            c.legis_index_path = ctx.path(as_string(v, "paths.legis_index"));
        };
        return m;
    }();
    return table;
}

void assign(RunConfig& config, const std::string& key, const Value& value, const Context& ctx) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
    it->second(config, value, ctx);
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out.push_back(c);
    }
    return out + "\"";
}

std::string number(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

template <class Range>
std::string string_array(const Range& items) {
    std::string out = "[";
    bool first = true;
    for (const auto& s : items) {
        if (!first) out += ", ";
        out += quote(s);
        first = false;
    }
    return out + "]";
}

}  // namespace

void RunConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw Error(ErrorCode::ConfigError, what);
    };
    require(!states.empty(), "at least one state");
    for (const auto& s : states) require(s.size() == 2, "state codes are two letters: '" + s + "'");
    require(!article_months.empty(), "article month range is empty");
    require(!post_months.empty(), "post month range is empty");
    require(!screening_months().empty(), "article and post month ranges do not overlap");
    require(!theme_filter.empty(), "filter.themes must list at least one theme");
    require(prune_threshold >= 0.0 && prune_threshold <= 1.0, "screening.prune_threshold in [0,1]");
    require(!lags.empty(), "screening.lags must not be empty");
    for (int l : lags) require(l >= 1, "screening.lags must be >= 1");
    require(significance > 0.0 && significance < 1.0, "screening.significance in (0,1)");
    require(screen_top >= 1, "screening.top >= 1");
    require(max_gaps >= 0, "screening.max_gaps >= 0");
    require(variance_target > 0.0 && variance_target <= 1.0, "var.variance_target in (0,1]");
    require(var_features >= 1, "var.features >= 1");
    require(redundancy > 0.0 && redundancy <= 1.0, "var.redundancy in (0,1]");
    require(lda_topics >= 2, "lda.topics >= 2");
    require(lda_iterations >= 1, "lda.iterations >= 1");
    require(lda_beta > 0.0, "lda.beta > 0");
    require(lda_top_words >= 2, "lda.top_words >= 2");
    require(legis_first_year <= legis_last_year, "legis year range");
    require(theme_candidates >= 1, "legis.theme_candidates >= 1");
    require(max_in_flight >= 1, "annotate.max_in_flight >= 1");
    require(threads >= 0, "threads >= 0");
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
    RunConfig config;
    const Context ctx{std::filesystem::path(base_dir)};
    std::istringstream in(text);
    std::string section;
    int line_no = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        const auto line = strip(strip_comment(raw));
        if (line.empty()) continue;
        try {
            if (line.front() == '[') {
                if (line.back() != ']') throw Error(ErrorCode::ConfigError, "bad table header");
                section = std::string(strip(line.substr(1, line.size() - 2)));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw Error(ErrorCode::ConfigError, "expected key = value");
            const std::string key(strip(line.substr(0, eq)));
            const Value value = ValueParser(strip(line.substr(eq + 1))).parse_all();
            assign(config, section.empty() ? key : section + "." + key, value, ctx);
        } catch (const Error& e) {
            throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_config(ss.str(), dir.empty() ? "." : dir.string());
}

void apply_override(RunConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "override needs key=value: " + assignment);
    const std::string key(strip(std::string_view(assignment).substr(0, eq)));
    const std::string_view rhs = strip(std::string_view(assignment).substr(eq + 1));
    Value value;
    try {
        value = ValueParser(rhs).parse_all();
    } catch (const Error&) {
        value.kind = Value::Kind::String;  // bare words are strings on the command line
        value.text = std::string(rhs);
    }
    assign(config, key, value, Context{std::filesystem::current_path()});
}

std::string to_config_text(const RunConfig& c) {
    std::ostringstream os;
    os << "seed = " << c.seed << '\n';
    os << "threads = " << c.threads << '\n';
    os << "states = " << string_array(c.states) << "\n\n";
    os << "[months]\n";
    os << "articles = [" << quote(c.article_months.first.str()) << ", " << quote(c.article_months.last.str()) << "]\n";
    os << "posts = [" << quote(c.post_months.first.str()) << ", " << quote(c.post_months.last.str()) << "]\n\n";
    os << "[filter]\nthemes = " << string_array(c.theme_filter) << "\n\n";
    os << "[screening]\n";
    os << "prune_threshold = " << number(c.prune_threshold) << '\n';
    os << "lags = [";
    for (std::size_t i = 0; i < c.lags.size(); ++i) os << (i ? ", " : "") << c.lags[i];
    os << "]\n";
    os << "significance = " << number(c.significance) << '\n';
    os << "top = " << c.screen_top << '\n';
    os << "bh_correction = " << (c.bh_correction ? "true" : "false") << '\n';
    os << "max_gaps = " << c.max_gaps << "\n\n";
    os << "[var]\n";
    os << "variance_target = " << number(c.variance_target) << '\n';
    os << "features = " << c.var_features << '\n';
    os << "redundancy = " << number(c.redundancy) << "\n\n";
    os << "[lda]\n";
    os << "topics = " << c.lda_topics << '\n';
    os << "iterations = " << c.lda_iterations << '\n';
    os << "alpha = " << number(c.lda_alpha) << '\n';
    os << "beta = " << number(c.lda_beta) << '\n';
    os << "top_words = " << c.lda_top_words << "\n\n";
    os << "[legis]\n";
    os << "first_year = " << c.legis_first_year << '\n';
    os << "last_year = " << c.legis_last_year << '\n';
    os << "pooled_ttest = " << (c.pooled_ttest ? "true" : "false") << '\n';
    os << "keyword_mentions = " << (c.keyword_mentions ? "true" : "false") << '\n';
    os << "theme_candidates = " << c.theme_candidates << '\n';
    os << "candidate_themes = " << string_array(c.candidate_themes) << "\n\n";
    os << "[annotate]\n";
    os << "backend_command = " << quote(c.backend_command) << '\n';
    os << "max_in_flight = " << c.max_in_flight << "\n\n";
    os << "[paths]\n";
    os << "gkg = " << string_array(c.gkg_paths) << '\n';
    os << "posts = " << quote(c.posts_path) << '\n';
    os << "legislation = " << quote(c.legislation_path) << '\n';
    os << "legis_index = " << quote(c.legis_index_path) << '\n';
    return os.str();
}

void to_json(nlohmann::json& j, const RunConfig& c) {
    j = nlohmann::json{
        {"states", c.states},
        {"article_months", {c.article_months.first.str(), c.article_months.last.str()}},
        {"post_months", {c.post_months.first.str(), c.post_months.last.str()}},
        {"theme_filter", c.theme_filter},
        {"prune_threshold", c.prune_threshold},
        {"lags", c.lags},
        {"significance", c.significance},
        {"screen_top", c.screen_top},
        {"bh_correction", c.bh_correction},
        {"max_gaps", c.max_gaps},
        {"variance_target", c.variance_target},
        {"var_features", c.var_features},
        {"redundancy", c.redundancy},
        {"lda_topics", c.lda_topics},
        {"lda_iterations", c.lda_iterations},
        {"lda_alpha", c.lda_alpha},
        {"lda_beta", c.lda_beta},
        {"lda_top_words", c.lda_top_words},
        {"theme_candidates", c.theme_candidates},
        {"candidate_themes", c.candidate_themes},
        {"legis_first_year", c.legis_first_year},
        {"legis_last_year", c.legis_last_year},
        {"pooled_ttest", c.pooled_ttest},
        {"keyword_mentions", c.keyword_mentions},
        {"seed", c.seed},
        {"gkg_paths", c.gkg_paths},
        {"posts_path", c.posts_path},
        {"legislation_path", c.legislation_path},
        {"legis_index_path", c.legis_index_path},
        {"backend_command", c.backend_command},
    };
}

void from_json(const nlohmann::json& j, RunConfig& c) {
    auto months = [](const nlohmann::json& a) {
        return MonthRange{YearMonth::parse(a.at(0).get<std::string>()),
                          YearMonth::parse(a.at(1).get<std::string>())};
    };
    j.at("states").get_to(c.states);
    c.article_months = months(j.at("article_months"));
    c.post_months = months(j.at("post_months"));
    j.at("theme_filter").get_to(c.theme_filter);
    j.at("prune_threshold").get_to(c.prune_threshold);
    j.at("lags").get_to(c.lags);
    j.at("significance").get_to(c.significance);
    j.at("screen_top").get_to(c.screen_top);
    j.at("bh_correction").get_to(c.bh_correction);
    j.at("max_gaps").get_to(c.max_gaps);
    j.at("variance_target").get_to(c.variance_target);
    j.at("var_features").get_to(c.var_features);
    j.at("redundancy").get_to(c.redundancy);
    j.at("lda_topics").get_to(c.lda_topics);
    j.at("lda_iterations").get_to(c.lda_iterations);
    j.at("lda_alpha").get_to(c.lda_alpha);
    j.at("lda_beta").get_to(c.lda_beta);
    j.at("lda_top_words").get_to(c.lda_top_words);
    j.at("theme_candidates").get_to(c.theme_candidates);
    j.at("candidate_themes").get_to(c.candidate_themes);
    j.at("legis_first_year").get_to(c.legis_first_year);
    j.at("legis_last_year").get_to(c.legis_last_year);
    j.at("pooled_ttest").get_to(c.pooled_ttest);
    j.at("keyword_mentions").get_to(c.keyword_mentions);
    j.at("seed").get_to(c.seed);
    // Execution knobs stay out of the canonical form so outputs do not depend on them.
    if (j.contains("threads")) j.at("threads").get_to(c.threads);
    if (j.contains("max_in_flight")) j.at("max_in_flight").get_to(c.max_in_flight);
    j.at("gkg_paths").get_to(c.gkg_paths);
    j.at("posts_path").get_to(c.posts_path);
    j.at("legislation_path").get_to(c.legislation_path);
    j.at("legis_index_path").get_to(c.legis_index_path);
    j.at("backend_command").get_to(c.backend_command);
}

std::string config_hash(const RunConfig& config) {
    nlohmann::json j = config;
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

}  // namespace mediaframe

#include "mediaframe/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace mediaframe {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

const StateReport* find_state(const RunReport& report, const std::string& state) {
    for (const auto& s : report.states)
        if (s.state == state) return &s;
    return nullptr;
}

std::string table1(const RunReport& report) {
    std::ostringstream os;
    os << "state,p,r,r2\n";
    for (const auto& state : report.config.states) {
        const auto* s = find_state(report, state);
        os << state << ',';
        if (s && s->var)
            os << format_real(s->var->var.joint_p) << ',' << format_real(s->var->var.fit.r) << ','
               << format_real(s->var->var.fit.r_squared);
        else
            os << ",,";
        os << '\n';
    }
    return os.str();
}

std::string screen_table(const StateReport* s) {
    std::ostringstream os;
    os << "topic,cc,p,lag\n";
    if (s && s->screening)
        for (const auto& r : s->screening->rows)
            os << r.topic() << ',' << format_real(r.granger.cc) << ',' << format_real(r.p_adjusted) << ','
               << r.granger.lag << '\n';
    return os.str();
}

std::string ttest_table(const StateReport* s) {
    std::ostringstream os;
    os << "theme,t,p,mentioned_mean,mentioned_sd,not_mentioned_mean,not_mentioned_sd\n";
    if (s && s->ttests)
        for (const auto& r : s->ttests->rows)
            os << r.theme << ',' << format_real(r.test.t_stat) << ',' << format_real(r.test.p_value) << ','
               << format_real(r.test.group_means.first) << ',' << format_real(r.test.group_sds.first) << ','
               << format_real(r.test.group_means.second) << ',' << format_real(r.test.group_sds.second) << '\n';
    return os.str();
}

void salience_line(std::ostream& os, const SalienceRow& row) {
    const auto& f = row.fit;
    os << row.scope << ',' << row.years << ',' << format_real(f.coefficients(0)) << ','
       << format_real(f.coefficients(1)) << ',' << format_real(f.p_value) << ',' << format_real(f.r) << ','
       << format_real(f.r_squared) << '\n';
}

std::string salience_table(const RunReport& report) {
    std::ostringstream os;
    os << "scope,years,intercept,slope,p,r,r2\n";
    for (const auto& state : report.config.states)
        if (const auto* s = find_state(report, state); s && s->salience) salience_line(os, *s->salience);
    if (report.pooled_salience) salience_line(os, *report.pooled_salience);
    return os.str();
}

std::string per_source_table(const RunReport& report) {
    std::ostringstream os;
    os << "state,month,articles_per_source\n";
    for (const auto& state : report.config.states) {
        const auto* s = find_state(report, state);
        if (!s || s->per_source.size() == 0) continue;
        for (Eigen::Index i = 0; i < s->per_source.size(); ++i)
            os << state << ',' << s->per_source.month_at(i).str() << ',' << format_real(s->per_source.values(i))
               << '\n';
    }
    return os.str();
}

std::string figure1_table(const StateReport* s) {
    std::ostringstream os;
    if (!s || !s->figure1) {
        os << "month,sentiment,mean_selected\n";
        return os.str();
    }
    const auto& fig = *s->figure1;
    os << "month,sentiment";
    for (const auto& f : fig.features) os << ',' << f;
    os << ",mean_selected\n";
    for (Eigen::Index i = 0; i < fig.months.size(); ++i) {
        os << fig.months.first.plus(static_cast<int>(i)).str() << ',' << format_real(fig.sentiment(i));
        double sum = 0.0;
        int n = 0;
        for (Eigen::Index j = 0; j < fig.values.cols(); ++j) {
            const double v = fig.values(i, j);
            os << ',' << format_real(v);
            if (!is_missing(v)) {
                sum += v;
                ++n;
            }
        }
        os << ',' << format_real(n ? sum / n : kMissing) << '\n';
    }
    return os.str();
}

nlohmann::ordered_json provenance(const RunReport& report) {
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash(report.config);
    j["seed"] = report.config.seed;
    j["config"] = nlohmann::json(report.config);
    j["gkg"] = {{"lines", report.gkg_lines},
                {"skipped", report.skipped.size()},
                {"dropped_themes", report.parse_stats.dropped_themes},
                {"dropped_locations", report.parse_stats.dropped_locations},
                {"dropped_tones", report.parse_stats.dropped_tones},
                {"tone_mismatches", report.parse_stats.tone_mismatches}};
    j["posts"] = {{"invalid_labels", report.posts_invalid}, {"backend_unavailable", report.posts_unavailable}};
    nlohmann::ordered_json states = nlohmann::ordered_json::object();
    for (const auto& s : report.states) {
        nlohmann::ordered_json st;
        st["articles"] = s.articles;
        if (s.screening) {
            const auto& sc = *s.screening;
            st["screening"] = {{"tested", sc.tested},
                               {"pruned", sc.pruned},
                               {"dropped_nonstationary", sc.dropped_nonstationary},
                               {"failed", sc.failed},
                               {"significant", sc.significant.size()},
                               {"sentiment_transform", std::string(to_string(sc.sentiment_transform))}};
            nlohmann::ordered_json transforms = nlohmann::ordered_json::object();
            for (const auto& r : sc.rows) transforms[r.topic()] = std::string(to_string(r.transform));
            st["screening"]["transforms"] = transforms;
        }
        if (s.var) {
            st["var"] = {{"features", s.var->var.selected_features},
                         {"fewer_than_k", s.var->selection.fewer_than_k},
                         {"months", {s.var->months.first.str(), s.var->months.last.str()}},
                         {"joint_f", format_real(s.var->var.joint_f)},
                         {"df", {s.var->var.joint_df_num, s.var->var.joint_df_den}}};
        }
        if (s.ttests) st["ttests"] = {{"rows", s.ttests->rows.size()}, {"skipped", s.ttests->skipped.size()}};
        states[s.state] = st;
    }
    j["states"] = states;
    nlohmann::ordered_json gaps = nlohmann::ordered_json::array();
    for (const auto& g : report.gaps) gaps.push_back({{"state", g.state}, {"stage", g.stage}, {"message", g.message}});
    j["gaps"] = gaps;
    return j;
}

}  // namespace

void emit_report(const RunReport& report, const std::string& out_dir) {
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir + ": " + ec.message());

    write_file(dir / "table1.csv", table1(report));
    for (const auto& state : report.config.states) {
        const auto* s = find_state(report, state);
        write_file(dir / ("screen_" + state + ".csv"), screen_table(s));
        write_file(dir / ("ttests_" + state + ".csv"), ttest_table(s));
        write_file(dir / ("fig1_" + state + ".csv"), figure1_table(s));
    }
    write_file(dir / "salience.csv", salience_table(report));
    write_file(dir / "fig3_per_source.csv", per_source_table(report));
    write_file(dir / "provenance.json", provenance(report).dump(2) + "\n");
}

}  // namespace mediaframe

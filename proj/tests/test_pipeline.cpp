#include "mediaframe/pipeline.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mediaframe;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("mf_pipeline_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

std::size_t line_count(const fs::path& p) {
    const auto s = slurp(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

const RunConfig& synth_config() {
    static const RunConfig config = [] {
        SynthOptions opts;
        opts.states = {"CA", "NY"};
        return synthesize(opts, scratch("synth").string());
    }();
    return config;
}

int run_cli(const std::string& args) {
    const int status = std::system(("'" + std::string(MF_CLI) + "' " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("planted theme is found at its lag") {
    const auto report = run_pipeline(synth_config());
    CHECK(exit_code(report) == 0);
    REQUIRE(report.states.size() == 2);
    for (const auto& s : report.states) {
        REQUIRE(s.screening);
        REQUIRE_FALSE(s.screening->rows.empty());
        const auto& top = s.screening->rows.front();
        CHECK(top.topic() == "EPU_POLICY_CONGRESSIONAL_POS");
        CHECK(top.granger.lag == 2);
        CHECK(top.granger.cc > 0.5);
        for (const auto& r : s.screening->rows) CHECK(r.p_adjusted < 0.05);
        REQUIRE(s.var);
        CHECK(s.var->var.selected_features.front() == "EPU_POLICY_CONGRESSIONAL_POS");
        REQUIRE(s.ttests);
        REQUIRE(s.salience);
        CHECK(s.salience->years == 9);
    }
    REQUIRE(report.pooled_salience);
    CHECK(report.pooled_salience->years == 18);
}

TEST_CASE("output does not depend on thread count") {
    auto one = synth_config();
    one.threads = 1;
    auto four = synth_config();
    four.threads = 4;
    const auto a = scratch("threads1"), b = scratch("threads4");
    emit_report(run_pipeline(one), a.string());
    emit_report(run_pipeline(four), b.string());
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
        ++files;
    }
    CHECK(files == 10);
}

TEST_CASE("report files and headers") {
    const auto dir = scratch("golden");
    emit_report(run_pipeline(synth_config()), dir.string());
    CHECK(first_line(dir / "table1.csv") == "state,p,r,r2");
    CHECK(line_count(dir / "table1.csv") == 3);
    for (const std::string st : {"CA", "NY"}) {
        CHECK(first_line(dir / ("screen_" + st + ".csv")) == "topic,cc,p,lag");
        CHECK(first_line(dir / ("ttests_" + st + ".csv")) ==
              "theme,t,p,mentioned_mean,mentioned_sd,not_mentioned_mean,not_mentioned_sd");
        const auto fig = first_line(dir / ("fig1_" + st + ".csv"));
        CHECK(fig.rfind("month,sentiment,EPU_POLICY_CONGRESSIONAL_POS", 0) == 0);
        CHECK(fig.size() > 14);
        CHECK(fig.substr(fig.size() - 14) == ",mean_selected");
    }
    CHECK(first_line(dir / "salience.csv") == "scope,years,intercept,slope,p,r,r2");
    CHECK(line_count(dir / "salience.csv") == 4);
    CHECK(first_line(dir / "fig3_per_source.csv") == "state,month,articles_per_source");
    CHECK(line_count(dir / "fig3_per_source.csv") == 1 + 2 * 106);

    // Every CSV row has the header's width.
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".csv") continue;
        std::ifstream in(entry.path());
        std::string line;
        std::getline(in, line);
        const auto width = std::count(line.begin(), line.end(), ',');
        while (std::getline(in, line)) CHECK(std::count(line.begin(), line.end(), ',') == width);
    }
}

TEST_CASE("provenance round trip") {
    const auto dir = scratch("provenance");
    const auto report = run_pipeline(synth_config());
    emit_report(report, dir.string());
    const auto j = nlohmann::json::parse(slurp(dir / "provenance.json"));
    auto back = j.at("config").get<RunConfig>();
    back.threads = report.config.threads;
    back.max_in_flight = report.config.max_in_flight;
    CHECK(back == report.config);
    CHECK(j.at("config_hash") == config_hash(report.config));
    CHECK(j.at("seed") == report.config.seed);
    CHECK(j.at("gaps").empty());
    CHECK(j.at("states").at("CA").at("screening").at("tested").get<int>() > 0);
    CHECK(j.at("gkg").at("skipped") == 0);
}

TEST_CASE("an empty report writes header-only files") {
    RunReport empty;
    empty.config.states = {"CA"};
    const auto dir = scratch("empty");
    emit_report(empty, dir.string());
    CHECK(slurp(dir / "table1.csv") == "state,p,r,r2\nCA,,,\n");
    CHECK(slurp(dir / "screen_CA.csv") == "topic,cc,p,lag\n");
    CHECK(slurp(dir / "fig1_CA.csv") == "month,sentiment,mean_selected\n");
    CHECK(slurp(dir / "salience.csv") == "scope,years,intercept,slope,p,r,r2\n");
    CHECK(slurp(dir / "fig3_per_source.csv") == "state,month,articles_per_source\n");
    CHECK(line_count(dir / "ttests_CA.csv") == 1);
}

TEST_CASE("stages run independently") {
    auto no_posts = synth_config();
    no_posts.posts_path.clear();
    const auto report = run_pipeline(no_posts);
    CHECK(report.partial());
    CHECK(exit_code(report) == 2);
    for (const auto& s : report.states) {
        CHECK_FALSE(s.screening);
        CHECK_FALSE(s.var);
        CHECK(s.ttests);
        CHECK(s.salience);
    }

    const auto legis_only = run_pipeline(synth_config(), {false, false, true});
    CHECK_FALSE(legis_only.partial());
    CHECK_FALSE(legis_only.states[0].screening);
    CHECK(legis_only.states[0].ttests);

    auto no_legis = synth_config();
    no_legis.legis_index_path = "/nonexistent/index.jsonl";
    const auto screened = run_pipeline(no_legis);
    CHECK(screened.partial());
    CHECK(screened.states[0].screening);
    CHECK(screened.states[0].var);
}

TEST_CASE("legislation from bill text") {
    auto from_bills = synth_config();
    from_bills.legis_index_path.clear();
    from_bills.keyword_mentions = true;
    const auto r = run_pipeline(from_bills, {false, false, true});
    REQUIRE(r.states[0].ttests);
    CHECK(r.states[0].bill_counts.size() == 9);

    from_bills.keyword_mentions = false;
    from_bills.lda_iterations = 30;
    from_bills.lda_topics = 3;
    const auto lda = run_pipeline(from_bills, {false, false, true});
    CHECK(lda.states[0].ttests);
}

TEST_CASE("unscored posts go through the backend") {
    const auto dir = scratch("unscored");
    auto config = synth_config();
    {
        std::ifstream in(config.posts_path);
        std::ofstream out(dir / "posts.jsonl");
        for (std::string line; std::getline(in, line);) {
            auto j = nlohmann::ordered_json::parse(line);
            j.erase("score");
            out << j.dump() << '\n';
        }
    }
    config.posts_path = (dir / "posts.jsonl").string();
    FixedReplyBackend four("4");
    const auto report = run_pipeline(config, {true, false, false}, &four);
    // Every post scored 4 leaves a constant sentiment series, which is reported as a gap.
    CHECK(report.posts_invalid == 0);
    CHECK_FALSE(report.states[0].screening);
    CHECK(report.partial());
    FixedReplyBackend junk("n/a");
    const auto invalid = run_pipeline(config, {true, false, false}, &junk);
    CHECK(invalid.posts_invalid > 0);
}

TEST_CASE("loaders") {
    const auto dir = scratch("loaders");
    {
        std::ofstream out(dir / "posts.jsonl");
        out << R"({"date":"2020-01-05","state":"CA","text":"a","score":2})" << '\n'
            << '\n'
            << R"({"date":"2020-02-05","state":"NY","text":"b","score":null})" << '\n';
    }
    const auto posts = load_posts((dir / "posts.jsonl").string());
    REQUIRE(posts.size() == 2);
    CHECK(posts[0].month == YearMonth{2020, 1});
    CHECK(posts[0].score == 2);
    CHECK_FALSE(posts[1].score);
    {
        std::ofstream out(dir / "bad.jsonl");
        out << R"({"date":"2020-01-05","state":"CA","text":"a"})" << '\n' << "{oops" << '\n';
    }
    try {
        load_posts((dir / "bad.jsonl").string());
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IoError);
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    CHECK_THROWS_AS(load_bills((dir / "missing.jsonl").string()), Error);

    const auto idx = load_legislative_index(synth_config().legis_index_path, 2015, 2023);
    REQUIRE(idx.count("CA"));
    CHECK(idx.at("CA").bill_count.size() == 9);
}

TEST_CASE("top themes") {
    auto rec = [](std::vector<std::string> themes) {
        gkg::GkgRecord r;
        for (auto& t : themes) r.themes.push_back({t, 0});
        return r;
    };
    const std::vector<gkg::GkgRecord> recs{rec({"B", "B", "A"}), rec({"C", "A"}), rec({"B"})};
    CHECK(top_themes(recs, 10) == std::vector<std::string>{"A", "B", "C"});
    CHECK(top_themes(recs, 1) == std::vector<std::string>{"A"});
}

TEST_CASE("CLI exit codes") {
    const auto cfg = (fs::path(synth_config().gkg_paths.front()).parent_path() / "config.toml").string();
    const auto out = scratch("cli");
    CHECK(run_cli("report --config '" + cfg + "' --out '" + out.string() + "'") == 0);
    CHECK(fs::exists(out / "table1.csv"));
    CHECK(run_cli("report --config /nonexistent.toml --out '" + out.string() + "'") == 1);
    CHECK(run_cli("report --config '" + cfg + "' --set paths.posts=/nonexistent.jsonl --out '" + out.string() +
                  "'") == 2);
    CHECK(run_cli("report --config '" + cfg + "' --set var.features=zero --out '" + out.string() + "'") == 1);
    CHECK(run_cli("ingest '" + synth_config().gkg_paths.front() + "'") == 0);
}

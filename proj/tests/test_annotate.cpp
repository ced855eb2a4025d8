#include "mediaframe/annotate.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <atomic>
#include <random>
#include <sstream>

using namespace mediaframe;

namespace {

// Replies garbage first, then a valid label; counts calls.
class FlakyBackend final : public AnnotationBackend {
public:
    std::string send(const std::string& id, const std::string&) override {
        ++calls;
        return id.find("retry") == std::string::npos ? "I think it's a four" : "4";
    }
    std::atomic<int> calls{0};
};

class DownBackend final : public AnnotationBackend {
public:
    std::string send(const std::string&, const std::string&) override {
        throw Error(ErrorCode::BackendUnavailable, "down");
    }
};

std::string quote_shell(const std::string& s) { return "'" + s + "'"; }

}  // namespace

TEST_CASE("prompt rendering") {
    const auto post = AnnotationTask::post_sentiment();
    const auto p = post.render("they need shelters");
    CHECK(p.find("Category 1: Can U put out a video") != std::string::npos);
    CHECK(p.find("Category 5: I REALLY hate") != std::string::npos);
    CHECK(p.find("{examples}") == std::string::npos);
    CHECK(p.size() > 16);
    CHECK(p.substr(p.size() - 18) == "they need shelters");
    CHECK(post.allowed_labels.size() == 5);

    const auto year = AnnotationTask::bill_year(2019, 2020);
    const auto y = year.render("Introduced January 2020");
    CHECK(y.find("it can ONLY be 2019 or 2020") != std::string::npos);

    const auto themes = AnnotationTask::theme_map({"ARREST", "GENERAL_HEALTH", "TAX_FNCACT"});
    const auto t = themes.render("health care medical");
    CHECK(t.find("[ARREST, GENERAL_HEALTH, TAX_FNCACT]") != std::string::npos);
    CHECK(t.find("Output topics: SOC_GENERALCRIME, ARREST, SOC_POINTSOFOINTEREST_PRISON") != std::string::npos);
    CHECK(themes.max_labels == 3);
}

TEST_CASE("reply grammar") {
    const auto post = AnnotationTask::post_sentiment();
    CHECK(parse_reply(post, " 4\n") == Label{{"4"}});
    CHECK(parse_reply(post, "\"2\".") == Label{{"2"}});
    CHECK_FALSE(parse_reply(post, "6").valid());
    CHECK_FALSE(parse_reply(post, "").valid());
    CHECK_FALSE(parse_reply(post, "Score: 4").valid());

    const auto themes = AnnotationTask::theme_map({"A", "B", "C", "D"});
    CHECK(parse_reply(themes, "A, C") == Label{{"A", "C"}});
    CHECK(parse_reply(themes, "A, A, B") == Label{{"A", "B"}});
    CHECK_FALSE(parse_reply(themes, "A, B, C, D").valid());
    CHECK_FALSE(parse_reply(themes, "A, E").valid());
    CHECK_FALSE(parse_reply(themes, "A,,B").valid());
}

TEST_CASE("lexicon stub answers all three tasks") {
    LexiconStubBackend stub;
    const auto post = AnnotationTask::post_sentiment();
    CHECK(stub.send("1", post.render("filthy dangerous junkies")) == "1");
    CHECK(stub.send("2", post.render("we should help and support shelters")) == "5");
    CHECK(stub.send("3", post.render("the weather is nice")) == "3");
    const auto year = AnnotationTask::bill_year(2021, 2022);
    CHECK(stub.send("4", year.render("Approved by Governor 2022")) == "2022");
    CHECK(stub.send("5", year.render("no year here")) == "2021");
    const auto themes = AnnotationTask::theme_map({"ARREST", "GENERAL_HEALTH", "TAX_FNCACT"});
    const auto reply = stub.send("6", themes.render("health general arrest police"));
    CHECK(parse_reply(themes, reply) == Label{{"GENERAL_HEALTH", "ARREST"}});
}

TEST_CASE("batch annotation") {
    const auto post = AnnotationTask::post_sentiment();
    std::vector<std::string> items;
    for (int i = 0; i < 40; ++i) items.push_back(i % 2 ? "help shelters" : "filthy crime");
    LexiconStubBackend stub;
    for (int inflight : {1, 4}) {
        const auto r = annotate_batch(items, post, stub, {inflight, 1});
        CHECK(r.invalid == 0);
        CHECK(r.unavailable == 0);
        for (std::size_t i = 0; i < items.size(); ++i) CHECK(r.labels[i] == Label{{i % 2 ? "5" : "1"}});
    }

    FlakyBackend flaky;
    auto r = annotate_batch(items, post, flaky, {3, 1});
    CHECK(r.invalid == 0);
    CHECK(flaky.calls == 80);
    FlakyBackend flaky2;
    r = annotate_batch(items, post, flaky2, {3, 0});
    CHECK(r.invalid == 40);
    CHECK(r.errors[0] == "unparseable reply");

    FixedReplyBackend junk("maybe");
    r = annotate_batch(items, post, junk);
    CHECK(r.invalid == 40);

    DownBackend down;
    r = annotate_batch(items, post, down, {2, 1});
    CHECK(r.unavailable == 40);
    CHECK(r.invalid == 0);
    CHECK_FALSE(r.labels[3].valid());
}

TEST_CASE("process backend over the CLI stub server") {
    ProcessBackend proc(quote_shell(MF_CLI) + " annotate --serve-stub");
    LexiconStubBackend stub;
    const auto post = AnnotationTask::post_sentiment();
    for (const char* text : {"help shelters", "dangerous vagrants", "nothing"}) {
        const auto prompt = post.render(text);
        CHECK(proc.send("x", prompt) == stub.send("x", prompt));
    }
    std::vector<std::string> items(25, "support and dignity");
    const auto r = annotate_batch(items, post, proc, {4, 1});
    CHECK(r.invalid == 0);
    CHECK(r.labels[24] == Label{{"5"}});
}

TEST_CASE("serve_backend protocol") {
    LexiconStubBackend stub;
    std::istringstream in("{\"id\":\"a\",\"prompt\":\"x\"}\n\nnot json\n{\"id\":\"b\",\"prompt\":\"y\"}\n");
    std::ostringstream out;
    serve_backend(stub, in, out);
    CHECK(out.str() == "{\"id\":\"a\",\"reply\":\"\"}\n{\"id\":\"b\",\"reply\":\"\"}\n");
}

TEST_CASE("failing process backend") {
    ProcessBackend dead("exit 3", 1);
    try {
        dead.send("1", "hello");
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BackendUnavailable);
    }
    ProcessBackend liar("while read l; do echo '{\"id\":\"other\",\"reply\":\"3\"}'; done", 0);
    CHECK_THROWS_AS(liar.send("1", "hello"), Error);
}

TEST_CASE("krippendorff hand examples") {
    Eigen::MatrixXd two(2, 2);
    two << 1, 1, 1, 2;
    CHECK(krippendorff_alpha(two, DistanceMetric::Nominal).alpha == doctest::Approx(0.0));

    // Interval: units (1,2) (2,3) (3,4) (4,4). Values 1..4 with n_1=1, n_2=2, n_3=2, n_4=3.
    // Do = 2*(1+1+1)/8 = 0.75; De = sum_{c!=k} n_c n_k (c-k)^2 / (8*7) = 142/56.
    Eigen::MatrixXd four(4, 2);
    four << 1, 2, 2, 3, 3, 4, 4, 4;
    const auto r = krippendorff_alpha(four, DistanceMetric::Interval);
    CHECK(r.observed_disagreement == doctest::Approx(0.75));
    CHECK(r.expected_disagreement == doctest::Approx(142.0 / 56.0));
    CHECK(r.alpha == doctest::Approx(1.0 - 0.75 * 56.0 / 142.0));
    CHECK(r.n_items == 4);

    Eigen::MatrixXd perfect(3, 2);
    perfect << 1, 1, 2, 2, 3, 3;
    CHECK(krippendorff_alpha(perfect, DistanceMetric::Ordinal).alpha == doctest::Approx(1.0));

    Eigen::MatrixXd one(3, 1);
    one << 1, 2, 3;
    CHECK_THROWS_AS(krippendorff_alpha(one, DistanceMetric::Nominal), Error);
    Eigen::MatrixXd sparse(2, 2);
    sparse << 1, kMissing, kMissing, 2;
    CHECK_THROWS_AS(krippendorff_alpha(sparse, DistanceMetric::Nominal), Error);
}

TEST_CASE("krippendorff agrees with the pairwise oracle") {
    std::mt19937_64 rng(17);
    int checked = 0;
    for (int rep = 0; rep < 150; ++rep) {
        const int items = 5 + static_cast<int>(rng() % 20);
        const int coders = 2 + static_cast<int>(rng() % 3);
        Eigen::MatrixXd m(items, coders);
        for (int i = 0; i < items; ++i)
            for (int c = 0; c < coders; ++c)
                m(i, c) = rng() % 6 == 0 ? kMissing : double(1 + rng() % 5);
        for (auto [metric, om] : {std::pair{DistanceMetric::Nominal, oracle::Metric::Nominal},
                                  std::pair{DistanceMetric::Ordinal, oracle::Metric::Ordinal},
                                  std::pair{DistanceMetric::Interval, oracle::Metric::Interval}}) {
            double got = 0.0;
            try {
                got = krippendorff_alpha(m, metric).alpha;
            } catch (const Error&) {
                continue;
            }
            CHECK(std::abs(got - oracle::krippendorff(m, om)) < 1e-10);
            ++checked;
        }
    }
    CHECK(checked >= 300);
}

TEST_CASE("accuracy and theme codings") {
    const std::vector<Label> gold{{{"1"}}, {{"2"}}, {{"3"}}, {{"4"}}};
    const std::vector<Label> got{{{"1"}}, Label::invalid(), {{"3"}}, {{"5"}}};
    CHECK(label_accuracy(got, gold) == 0.5);
    CHECK_THROWS_AS(label_accuracy(std::span(got).first(2), gold), Error);

    const std::vector<std::string> themes{"A", "B", "C"};
    const std::vector<std::set<std::string>> manual{{"A", "B"}, {"C"}};
    const std::vector<std::set<std::string>> model{{"B"}, {"A"}};
    const auto m = theme_match_codings(manual, model, themes);
    REQUIRE(m.rows() == 6);
    // First item overlaps on B, so the model row copies the manual one.
    CHECK(m.col(0).head(3) == m.col(1).head(3));
    CHECK(m(3, 1) == 1.0);
    CHECK(m(5, 0) == 1.0);
    CHECK(m(5, 1) == 0.0);
}

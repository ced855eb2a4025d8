// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "mediaframe/annotate.hpp"
#include "mediaframe/distributions.hpp"
#include "mediaframe/econometrics.hpp"
#include "mediaframe/gkg.hpp"
#include "mediaframe/multivariate.hpp"
#include "mediaframe/pipeline.hpp"
#include "mediaframe/topics.hpp"

#include "oracles.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

using namespace mediaframe;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        notes.push_back(std::string(ok ? "" : "FAILED ") + what);
    }
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

Eigen::VectorXd normals(Eigen::Index n, std::mt19937_64& rng) {
    return Eigen::VectorXd::NullaryExpr(n, [&] { return standard_normal(rng); });
}

Eigen::VectorXd ar1(Eigen::Index n, double phi, std::mt19937_64& rng) {
    Eigen::VectorXd e = normals(n + 50, rng);
    for (Eigen::Index t = 1; t < e.size(); ++t) e(t) += phi * e(t - 1);
    return e.tail(n);
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

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    return lo + 1 < v.size() ? v[lo] * (1.0 - frac) + v[lo + 1] * frac : v[lo];
}

// ---------------------------------------------------------------------------

Outcome granger_power_size() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    const int t = 108;
    int rejected = 0;
    for (int seed = 0; seed < 200; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        const Eigen::VectorXd x = normals(t + 50, rng);
        const Eigen::VectorXd e = normals(t + 50, rng);
        Eigen::VectorXd y = Eigen::VectorXd::Zero(t + 50);
        for (int i = 1; i < t + 50; ++i) y(i) = 0.5 * y(i - 1) + 0.4 * x(i - 1) + e(i);
        if (granger_test(x.tail(t), y.tail(t), 1).p_value < 0.05) ++rejected;
    }
    const double power = rejected / 200.0;
    int false_rejections = 0;
    for (int seed = 0; seed < 500; ++seed) {
        std::mt19937_64 rng(5000 + seed);
        const Eigen::VectorXd x = ar1(t, 0.5, rng);
        const Eigen::VectorXd y = ar1(t, 0.5, rng);
        if (granger_test(x, y, 1).p_value < 0.05) ++false_rejections;
    }
    const double size = false_rejections / 500.0;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(power >= 0.90, fmt("power %.3f >= 0.90", power));
    o.require(size >= 0.02 && size <= 0.10, fmt("size %.3f in [0.02, 0.10]", size));
    o.require(secs < 30.0, fmt("%.2fs < 30s", secs));
    return o;
}

Outcome adf_calibration() {
    Outcome o;
    int kept = 0, rejected = 0;
    for (int seed = 0; seed < 200; ++seed) {
        std::mt19937_64 rng(20000 + seed);
        Eigen::VectorXd walk = normals(240, rng);
        for (Eigen::Index i = 1; i < walk.size(); ++i) walk(i) += walk(i - 1);
        if (!adf_test(walk).reject_unit_root) ++kept;
        if (adf_test(ar1(240, 0.5, rng)).reject_unit_root) ++rejected;
    }
    o.require(kept >= 180, fmt("random walk not rejected %.3f >= 0.90", kept / 200.0));
    o.require(rejected >= 180, fmt("AR(0.5) rejected %.3f >= 0.90", rejected / 200.0));

    // Null distribution of the lag-0 Dickey-Fuller t ratio at T = 250.
    const int reps = 100000;
    std::vector<double> stats;
    stats.reserve(reps);
    std::mt19937_64 rng(777);
    AdfLagPolicy zero;
    zero.max_lag = 0;
    zero.select_by_aic = false;
    int nobs = 0;
    Eigen::VectorXd walk(250);
    for (int r = 0; r < reps; ++r) {
        double level = 0.0;
        for (Eigen::Index i = 0; i < walk.size(); ++i) walk(i) = level += standard_normal(rng);
        const auto res = adf_test(walk, zero);
        stats.push_back(res.gamma_t_stat);
        nobs = res.nobs;
    }
    const auto cv = adf_critical_values(nobs);
    const double q1 = quantile(stats, 0.01), q5 = quantile(stats, 0.05), q10 = quantile(stats, 0.10);
    o.require(std::abs(q1 - cv.one) <= 0.03, fmt("1%%: MC %.4f vs %.4f", q1, cv.one));
    o.require(std::abs(q5 - cv.five) <= 0.03, fmt("5%%: MC %.4f vs %.4f", q5, cv.five));
    o.require(std::abs(q10 - cv.ten) <= 0.03, fmt("10%%: MC %.4f vs %.4f", q10, cv.ten));
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    std::mt19937_64 rng(31);
    const int n = 200;

    double ols_err = 0.0;
    for (int i = 0; i < n; ++i) {
        const int rows = 20 + static_cast<int>(rng() % 100), cols = 1 + static_cast<int>(rng() % 5);
        const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(rows, cols, [&] { return standard_normal(rng); });
        const Eigen::VectorXd y = x * normals(cols, rng) + normals(rows, rng);
        const auto got = ols_fit(x, y);
        const auto ref = oracle::normal_equations(x, y);
        ols_err = std::max({ols_err, (got.coefficients - ref.beta).cwiseAbs().maxCoeff(),
                            std::abs(got.r_squared - ref.r2), std::abs(got.f_stat - ref.f) / std::max(1.0, ref.f)});
    }
    o.require(ols_err <= 1e-8, fmt("ols_fit max err %.2e <= 1e-8", ols_err));

    double cc_err = 0.0;
    for (int i = 0; i < n; ++i) {
        const int len = 30 + static_cast<int>(rng() % 80), lag = static_cast<int>(rng() % 4);
        const Eigen::VectorXd x = normals(len, rng), y = normals(len, rng);
        const std::vector<double> xv(x.data(), x.data() + len), yv(y.data(), y.data() + len);
        cc_err = std::max(cc_err, std::abs(cross_correlation(x, y, lag) - oracle::lagged_correlation(xv, yv, lag)));
    }
    o.require(cc_err <= 1e-10, fmt("cross_correlation max err %.2e <= 1e-10", cc_err));

    double welch_err = 0.0;
    for (int i = 0; i < n; ++i) {
        std::vector<double> a(2 + rng() % 12), b(2 + rng() % 12);
        for (auto& v : a) v = standard_normal(rng) * 2.0 + 1.0;
        for (auto& v : b) v = standard_normal(rng);
        const auto got = welch_t_test(a, b);
        const auto ref = oracle::welch(a, b);
        welch_err = std::max({welch_err, std::abs(got.t_stat - ref.t), std::abs(got.df - ref.df)});
    }
    o.require(welch_err <= 1e-10, fmt("welch_t_test max err %.2e <= 1e-10", welch_err));

    double p_err = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d1 = 1 + static_cast<double>(rng() % 8), d2 = 3 + static_cast<double>(rng() % 150);
        const double f = 0.05 + 6.0 * uniform01(rng);
        p_err = std::max(p_err, std::abs(f_p_value(f, d1, d2) - oracle::f_upper_tail(f, d1, d2)));
        const double df = 2 + static_cast<double>(rng() % 100), t = 5.0 * (uniform01(rng) - 0.5);
        p_err = std::max(p_err, std::abs(t_p_value(t, df) - oracle::t_two_sided(t, df)));
    }
    o.require(p_err <= 1e-8, fmt("f_p_value/t_p_value max err %.2e <= 1e-8", p_err));

    double umass_err = 0.0;
    for (int i = 0; i < n; ++i) {
        const int v = 8 + static_cast<int>(rng() % 20);
        Corpus corpus;
        for (int w = 0; w < v; ++w) corpus.vocabulary.push_back("w" + std::to_string(w));
        for (int d = 0, docs = 5 + static_cast<int>(rng() % 30); d < docs; ++d) {
            std::vector<int> doc;
            for (int k = 0, len = 1 + static_cast<int>(rng() % 12); k < len; ++k)
                doc.push_back(static_cast<int>(rng() % (v / 2 + 1 + rng() % (v - v / 2))));
            corpus.documents.push_back(doc);
            corpus.doc_ids.push_back("d" + std::to_string(d));
        }
        TopicModel model;
        model.topics = 1 + static_cast<int>(rng() % 3);
        model.topic_word = Eigen::MatrixXd::NullaryExpr(model.topics, v, [&] { return uniform01(rng); });
        const auto got = umass_coherence(model, corpus, 10);
        for (int k = 0; k < model.topics; ++k)
            umass_err = std::max(umass_err, std::abs(got(k) - oracle::umass(model.top_words(k, 10), corpus.documents)));
    }
    o.require(umass_err <= 1e-10, fmt("umass_coherence max err %.2e <= 1e-10", umass_err));

    // Hand-computed: units (1,2) (2,3) (3,4) (4,4), interval metric.
    // Do = 6/8, De = 142/56, alpha = 1 - (6/8)(56/142).
    Eigen::MatrixXd four(4, 2);
    four << 1, 2, 2, 3, 3, 4, 4, 4;
    const double hand = 1.0 - 0.75 * 56.0 / 142.0;
    const double hand_err = std::abs(krippendorff_alpha(four, DistanceMetric::Interval).alpha - hand);
    double alpha_err = 0.0;
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd m(4 + rng() % 20, 2 + rng() % 3);
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng() % 7 == 0 ? kMissing : double(1 + rng() % 5);
        for (auto [metric, om] : {std::pair{DistanceMetric::Nominal, oracle::Metric::Nominal},
                                  std::pair{DistanceMetric::Ordinal, oracle::Metric::Ordinal},
                                  std::pair{DistanceMetric::Interval, oracle::Metric::Interval}}) {
            try {
                alpha_err = std::max(alpha_err, std::abs(krippendorff_alpha(m, metric).alpha - oracle::krippendorff(m, om)));
            } catch (const Error&) {
            }
        }
    }
    o.require(hand_err <= 1e-10, fmt("krippendorff 4x2 hand example err %.2e <= 1e-10", hand_err));
    o.require(alpha_err <= 1e-10, fmt("krippendorff vs pairwise oracle max err %.2e <= 1e-10", alpha_err));
    return o;
}

Outcome pca_var_recovery() {
    Outcome o;
    // Two latent factors behind six observed columns.
    int k2 = 0;
    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(40000 + seed);
        Eigen::MatrixXd f(108, 2);
        f.col(0) = normals(108, rng);
        f.col(1) = normals(108, rng);
        Eigen::MatrixXd load(2, 6);
        load << 1.0, 0.9, -0.8, 0.7, 0.0, 0.1,  //
            0.1, 0.0, 0.1, 0.0, -0.9, 0.8;
        Eigen::MatrixXd x = f * load;
        for (Eigen::Index j = 0; j < 6; ++j) x.col(j) += 0.05 * normals(108, rng);
        if (pca_fit(standardize(x).data, {}, 0.95).n_components == 2) ++k2;
    }
    o.require(k2 == 20, fmt("2-factor data gives k = 2 in %.0f/20", k2));

    double coef_err = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(41000 + seed);
        const int m = 4;
        Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(m, m, [&] { return standard_normal(rng); });
        a *= 0.95 / Eigen::EigenSolver<Eigen::MatrixXd>(a).eigenvalues().cwiseAbs().maxCoeff();
        const Eigen::VectorXd c = normals(m, rng);
        Eigen::MatrixXd x(60, m);
        x.row(0) = normals(m, rng).transpose();
        for (int i = 1; i < 60; ++i) x.row(i) = (c + a * x.row(i - 1).transpose()).transpose();
        const auto r = var_fit(x.col(0), x.rightCols(m - 1));
        Eigen::MatrixXd expected(m, m + 1);
        expected << c, a;
        coef_err = std::max(coef_err, (r.coefficient_matrix - expected).cwiseAbs().maxCoeff());
    }
    o.require(coef_err <= 1e-6, fmt("noiseless VAR max coefficient err %.2e <= 1e-6", coef_err));

    int significant = 0;
    for (int seed = 0; seed < 200; ++seed) {
        std::mt19937_64 rng(42000 + seed);
        const int t = 108;
        Eigen::MatrixXd feats(t, 6);
        for (Eigen::Index j = 0; j < 6; ++j) feats.col(j) = ar1(t, 0.3, rng);
        Eigen::VectorXd y = normals(t, rng);
        for (int i = 1; i < t; ++i) y(i) += 0.3 * y(i - 1) + 0.35 * feats(i - 1, 0) - 0.35 * feats(i - 1, 3);
        if (var_fit(y, feats).joint_p < 0.05) ++significant;
    }
    o.require(significant >= 180, fmt("2-driver VAR joint_p < 0.05 in %.3f >= 0.90", significant / 200.0));
    return o;
}

std::vector<std::string> planted_topic_texts(int docs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> out;
    for (int d = 0; d < docs; ++d) {
        const int main = d % 3;
        std::string text;
        for (int i = 0; i < 40; ++i) {
            const int topic = uniform01(rng) < 0.9 ? main : static_cast<int>(rng() % 3);
            text += "t" + std::to_string(topic) + "w" + std::to_string(rng() % 10) + " ";
        }
        out.push_back(text);
    }
    return out;
}

Outcome lda_recovery() {
    Outcome o;
    const auto corpus = preprocess(planted_topic_texts(200, 3));
    LdaOptions opts;
    opts.topics = 3;
    opts.iterations = 1000;
    opts.seed = 12345;
    const auto model = lda_fit(corpus, opts);
    double worst = 1.0;
    std::vector<int> matched;
    for (int k = 0; k < 3; ++k) {
        int best = 0, best_p = -1;
        for (int p = 0; p < 3; ++p) {
            int hits = 0;
            for (int w : model.top_words(k, 5))
                if (corpus.vocabulary[w].rfind("t" + std::to_string(p), 0) == 0) ++hits;
            if (hits > best) {
                best = hits;
                best_p = p;
            }
        }
        matched.push_back(best_p);
        worst = std::min(worst, best / 5.0);
    }
    std::sort(matched.begin(), matched.end());
    o.require(worst >= 0.8, fmt("worst matched top-5 overlap %.2f >= 0.80", worst));
    o.require(matched == std::vector<int>{0, 1, 2}, "each planted topic matched once");

    int picked3 = 0;
    const std::vector<int> ks{2, 3, 4, 5, 6};
    for (int seed = 0; seed < 20; ++seed) {
        const auto c = preprocess(planted_topic_texts(200, 100 + seed));
        LdaOptions base;
        base.iterations = 300;
        base.seed = 500 + seed;
        if (select_k(c, ks, base, 10) == 3) ++picked3;
    }
    o.require(picked3 >= 14, fmt("select_k picks 3 in %.0f/20 (>= 14)", picked3));
    return o;
}

Outcome parser_conformance() {
    Outcome o;
    const std::string data = MF_TEST_DATA;
    std::ifstream mf(data + "/gkg_manifest.json");
    const auto m = nlohmann::json::parse(mf);
    const auto res = gkg::read_gkg_file(data + "/gkg_fixture.csv");
    o.require(res.skipped.empty() && res.records.size() == 100,
              fmt("fixture: %.0f records, %.0f skipped", double(res.records.size()), double(res.skipped.size())));
    auto key17 = [](double v) { return fmt("%.17g", v); };
    std::map<std::string, int> themes, locations, tones;
    for (const auto& r : res.records) {
        for (const auto& t : r.themes) ++themes[t.code + "|" + std::to_string(t.offset)];
        for (const auto& l : r.locations)
            ++locations[std::to_string(l.loc_type) + "|" + l.full_name + "|" + l.country_code + "|" + l.adm1_code +
                        "|" + l.adm2_code + "|" + key17(l.latitude) + "|" + key17(l.longitude) + "|" +
                        l.feature_id + "|" + std::to_string(l.char_offset)];
        if (r.tone) {
            const auto& t = *r.tone;
            ++tones[key17(t.tone) + "|" + key17(t.positive_score) + "|" + key17(t.negative_score) + "|" +
                    key17(t.polarity) + "|" + key17(t.activity_density) + "|" + key17(t.self_group_density) + "|" +
                    std::to_string(t.word_count)];
        }
    }
    o.require(themes == m["themes"].get<std::map<std::string, int>>(), "theme multiset matches manifest");
    o.require(locations == m["locations"].get<std::map<std::string, int>>(), "location multiset matches manifest");
    o.require(tones == m["tones"].get<std::map<std::string, int>>(), "tone multiset matches manifest");

    const auto bad = gkg::read_gkg_file(data + "/gkg_corrupted.csv");
    std::ifstream lines_in(data + "/gkg_corrupted.lines");
    std::vector<std::size_t> expected, got;
    for (std::size_t n; lines_in >> n;) expected.push_back(n);
    for (const auto& s : bad.skipped) got.push_back(s.line);
    o.require(got == expected, fmt("corrupted fixture skips %.0f of %.0f expected rows exactly",
                                   double(got.size()), double(expected.size())));
    return o;
}

int run_cli(const std::string& args) {
    const int status = std::system(("'" + std::string(MF_CLI) + "' " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const fs::path& e2e_root() {
    static const fs::path root = [] {
        const auto p = fs::temp_directory_path() / "mf_acceptance";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

Outcome end_to_end() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    const auto root = e2e_root();
    const std::string synth = (root / "synth").string();
    o.require(run_cli("synth --out '" + synth + "' --state CA --lag 2 --seed 42") == 0, "synth exits 0");
    const std::string cfg = synth + "/config.toml";
    for (const char* run : {"run1", "run2"}) {
        const std::string out = (root / run).string();
        const bool ok = run_cli("screen --config '" + cfg + "' --out '" + out + "'") == 0 &&
                        run_cli("var --config '" + cfg + "' --out '" + out + "'") == 0 &&
                        run_cli("report --config '" + cfg + "' --out '" + out + "'") == 0;
        o.require(ok, std::string(run) + ": screen, var and report exit 0");
    }
    std::ifstream screen(root / "run1" / "screen_CA.csv");
    std::string header, row;
    std::getline(screen, header);
    bool found = false;
    while (std::getline(screen, row))
        if (row.rfind("EPU_POLICY_CONGRESSIONAL_POS,", 0) == 0 && row.substr(row.rfind(',') + 1) == "2") found = true;
    o.require(found, "planted theme screened at lag 2");

    std::size_t files = 0;
    bool identical = true;
    for (const auto& entry : fs::directory_iterator(root / "run1")) {
        ++files;
        identical = identical && slurp(entry.path()) == slurp(root / "run2" / entry.path().filename());
    }
    o.require(identical && files > 0, fmt("%.0f output files byte-identical across runs", double(files)));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs < 60.0, fmt("%.2fs < 60s", secs));
    return o;
}

Outcome shape_contracts() {
    Outcome o;
    const auto dir = e2e_root() / "run1";
    auto check = [&](const std::string& file, const std::string& header) {
        o.require(first_line(dir / file) == header, file + " header is " + header);
    };
    check("table1.csv", "state,p,r,r2");
    check("screen_CA.csv", "topic,cc,p,lag");
    check("ttests_CA.csv", "theme,t,p,mentioned_mean,mentioned_sd,not_mentioned_mean,not_mentioned_sd");
    std::ifstream t1(dir / "table1.csv");
    std::string line;
    std::getline(t1, line);
    std::getline(t1, line);
    o.require(std::count(line.begin(), line.end(), ',') == 3 && line.rfind("CA,", 0) == 0, "table1 row: " + line);
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"granger power and size", granger_power_size},
        {"adf calibration", adf_calibration},
        {"oracle equivalence", oracle_equivalence},
        {"pca and var recovery", pca_var_recovery},
        {"lda recovery", lda_recovery},
        {"gkg parser conformance", parser_conformance},
        {"end-to-end determinism", end_to_end},
        {"output shape contracts", shape_contracts},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::string detail;
        for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << " ("
                  << fmt("%.1fs", secs) << "): " << detail << std::endl;
        if (!o.pass) ++failed;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}

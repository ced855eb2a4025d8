#include "mediaframe/topics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

namespace mediaframe {

std::size_t Corpus::token_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.size();
    return n;
}

std::set<std::string> PreprocessOptions::default_stopwords() {
    return {"a",     "about", "above", "after", "again", "against", "all",   "also",  "an",
            "and",   "any",   "are",   "as",    "at",    "be",      "been",  "before", "being",
            "below", "between", "both", "but",  "by",    "can",     "could", "did",   "do",
            "does",  "doing", "down",  "during", "each", "few",     "for",   "from",  "further",
            "had",   "has",   "have",  "having", "he",   "her",     "here",  "hers",  "him",
            "his",   "how",   "i",     "if",    "in",    "into",    "is",    "it",    "its",
            "itself", "just", "may",   "me",    "more",  "most",    "must",  "my",    "no",
            "nor",   "not",   "now",   "of",    "off",   "on",      "once",  "only",  "or",
            "other", "our",   "ours",  "out",   "over",  "own",     "same",  "shall", "she",
            "should", "so",   "some",  "such",  "than",  "that",    "the",   "their", "theirs",
            "them",  "then",  "there", "these", "they",  "this",    "those", "through", "to",
            "too",   "under", "until", "up",    "upon",  "very",    "was",   "we",    "were",
            "what",  "when",  "where", "which", "while", "who",     "whom",  "why",   "will",
            "with",  "would", "you",   "your",  "yours"};
}

Corpus preprocess(std::span<const std::string> texts, std::span<const std::string> doc_ids,
                  const PreprocessOptions& options) {
    if (!doc_ids.empty() && doc_ids.size() != texts.size())
        throw Error(ErrorCode::LengthMismatch, "preprocess: doc ids vs texts");

    std::vector<std::vector<std::string>> tokenized(texts.size());
    std::map<std::string, int> doc_freq;
    for (std::size_t d = 0; d < texts.size(); ++d) {
        std::string token;
        auto flush = [&] {
            if (token.size() >= options.min_token_length && !options.stopwords.count(token))
                tokenized[d].push_back(token);
            token.clear();
        };
        for (unsigned char c : texts[d]) {
            if (c < 128 && std::isalnum(c))
                token.push_back(static_cast<char>(std::tolower(c)));
            else
                flush();
        }
        flush();
        std::set<std::string> unique(tokenized[d].begin(), tokenized[d].end());
        for (const auto& w : unique) ++doc_freq[w];
    }

    Corpus corpus;
    std::map<std::string, int> ids;
    for (const auto& [word, df] : doc_freq) {
        if (df < options.min_document_frequency) continue;
        ids.emplace(word, static_cast<int>(corpus.vocabulary.size()));
        corpus.vocabulary.push_back(word);
    }
    for (std::size_t d = 0; d < texts.size(); ++d) {
        std::vector<int> doc;
        for (const auto& w : tokenized[d])
            if (auto it = ids.find(w); it != ids.end()) doc.push_back(it->second);
        if (doc.empty()) {
            ++corpus.dropped_documents;
            continue;
        }
        corpus.documents.push_back(std::move(doc));
        corpus.doc_ids.push_back(doc_ids.empty() ? "doc" + std::to_string(d) : doc_ids[d]);
    }
    if (corpus.documents.empty()) throw Error(ErrorCode::EmptyCorpus, "preprocess: nothing left");
    return corpus;
}

std::vector<int> TopicModel::top_words(int topic, int n) const {
    const auto v = static_cast<int>(topic_word.cols());
    std::vector<int> ids(v);
    std::iota(ids.begin(), ids.end(), 0);
    const int take = std::min(n, v);
    std::partial_sort(ids.begin(), ids.begin() + take, ids.end(), [&](int a, int b) {
        const double pa = topic_word(topic, a);
        const double pb = topic_word(topic, b);
        return pa != pb ? pa > pb : a < b;
    });
    ids.resize(take);
    return ids;
}

namespace {

struct GibbsState {
    int topics;
    int vocab;
    double alpha;
    double beta;
    std::vector<std::vector<int>> assignment;  // per document, per token
    Eigen::MatrixXi doc_topic;                 // D x K
    Eigen::MatrixXi topic_word;                // K x V
    Eigen::VectorXi topic_total;               // K

    void estimates(const Corpus& corpus, Eigen::MatrixXd& phi, Eigen::MatrixXd& theta) const {
        phi = (topic_word.cast<double>().array() + beta).matrix();
        for (int k = 0; k < topics; ++k) phi.row(k) /= (topic_total(k) + vocab * beta);
        theta = (doc_topic.cast<double>().array() + alpha).matrix();
        for (Eigen::Index d = 0; d < theta.rows(); ++d)
            theta.row(d) /= (static_cast<double>(corpus.documents[d].size()) + topics * alpha);
    }
};

}  // namespace

TopicModel lda_fit(const Corpus& corpus, const LdaOptions& options) {
    if (corpus.documents.empty() || corpus.vocabulary.empty())
        throw Error(ErrorCode::EmptyCorpus, "lda_fit");
    if (options.topics < 2) throw Error(ErrorCode::InvalidArgument, "lda_fit: need K >= 2");
    if (options.iterations < 0 || !(options.beta > 0.0))
        throw Error(ErrorCode::InvalidArgument, "lda_fit: bad hyperparameters");

    const int k_topics = options.topics;
    const auto n_docs = static_cast<int>(corpus.documents.size());
    GibbsState st{k_topics,
                  static_cast<int>(corpus.vocabulary.size()),
                  options.alpha > 0.0 ? options.alpha : 50.0 / k_topics,
                  options.beta,
                  std::vector<std::vector<int>>(n_docs),
                  Eigen::MatrixXi::Zero(n_docs, k_topics),
                  Eigen::MatrixXi::Zero(k_topics, static_cast<Eigen::Index>(corpus.vocabulary.size())),
                  Eigen::VectorXi::Zero(k_topics)};

    std::vector<int> order(n_docs);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return corpus.doc_ids[a] < corpus.doc_ids[b]; });

    std::vector<std::mt19937_64> streams;
    streams.reserve(n_docs);
    for (int d = 0; d < n_docs; ++d)
        streams.emplace_back(mix_seed(options.seed, fnv1a(corpus.doc_ids[d])));

    for (int d : order) {
        const auto& doc = corpus.documents[d];
        auto& z = st.assignment[d];
        z.resize(doc.size());
        for (std::size_t i = 0; i < doc.size(); ++i) {
            const int k = std::min(k_topics - 1, static_cast<int>(uniform01(streams[d]) * k_topics));
            z[i] = k;
            ++st.doc_topic(d, k);
            ++st.topic_word(k, doc[i]);
            ++st.topic_total(k);
        }
    }

    const double v_beta = st.vocab * st.beta;
    std::vector<double> cumulative(k_topics);
    Eigen::MatrixXd phi;
    Eigen::MatrixXd theta;
    for (int sweep = 0; sweep < options.iterations; ++sweep) {
        for (int d : order) {
            const auto& doc = corpus.documents[d];
            auto& z = st.assignment[d];
            auto& rng = streams[d];
            for (std::size_t i = 0; i < doc.size(); ++i) {
                const int w = doc[i];
                int k = z[i];
                --st.doc_topic(d, k);
                --st.topic_word(k, w);
                --st.topic_total(k);

                double total = 0.0;
                for (int t = 0; t < k_topics; ++t) {
                    total += (st.doc_topic(d, t) + st.alpha) * (st.topic_word(t, w) + st.beta) /
                             (st.topic_total(t) + v_beta);
                    cumulative[t] = total;
                }
                const double u = uniform01(rng) * total;
                k = static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                     cumulative.begin());
                k = std::min(k, k_topics - 1);

                z[i] = k;
                ++st.doc_topic(d, k);
                ++st.topic_word(k, w);
                ++st.topic_total(k);
            }
        }
        if (options.on_sweep) {
            st.estimates(corpus, phi, theta);
            options.on_sweep(sweep, phi, theta);
        }
    }

    TopicModel model;
    model.topics = k_topics;
    model.seed = options.seed;
    st.estimates(corpus, model.topic_word, model.doc_topic);
    return model;
}

Eigen::VectorXd umass_coherence(const TopicModel& model, const Corpus& corpus, int top_n) {
    // Document lists per word, sorted by construction.
    std::vector<std::vector<int>> docs_with(corpus.vocabulary.size());
    for (int d = 0; d < static_cast<int>(corpus.documents.size()); ++d) {
        std::vector<int> words = corpus.documents[d];
        std::sort(words.begin(), words.end());
        words.erase(std::unique(words.begin(), words.end()), words.end());
        for (int w : words) docs_with[w].push_back(d);
    }
    auto co_count = [&](int a, int b) {
        const auto& da = docs_with[a];
        const auto& db = docs_with[b];
        std::size_t i = 0, j = 0, n = 0;
        while (i < da.size() && j < db.size()) {
            if (da[i] < db[j]) ++i;
            else if (db[j] < da[i]) ++j;
            else { ++n; ++i; ++j; }
        }
        return static_cast<double>(n);
    };

    Eigen::VectorXd out(model.topics);
    for (int k = 0; k < model.topics; ++k) {
        const auto top = model.top_words(k, top_n);
        double score = 0.0;
        for (std::size_t m = 1; m < top.size(); ++m) {
            for (std::size_t l = 0; l < m; ++l) {
                // An absent conditioning word counts as one document.
                const double dl = std::max<double>(1.0, static_cast<double>(docs_with[top[l]].size()));
                score += std::log((co_count(top[m], top[l]) + 1.0) / dl);
            }
        }
        out(k) = score;
    }
    return out;
}

int select_k(const Corpus& corpus, std::span<const int> k_range, const LdaOptions& base, int top_n) {
    if (k_range.empty()) throw Error(ErrorCode::InvalidArgument, "select_k: empty K range");
    std::vector<int> ks(k_range.begin(), k_range.end());
    std::sort(ks.begin(), ks.end());
    int best_k = ks.front();
    double best = -std::numeric_limits<double>::infinity();
    for (int k : ks) {
        LdaOptions opts = base;
        opts.topics = k;
        opts.alpha = base.alpha > 0.0 ? base.alpha : 50.0 / k;
        const auto model = lda_fit(corpus, opts);
        const double mean = umass_coherence(model, corpus, top_n).mean();
        if (mean > best) {
            best = mean;
            best_k = k;
        }
    }
    return best_k;
}

void write_topic_report(std::ostream& out, const TopicModel& model, const Corpus& corpus, int top_n) {
    const Eigen::VectorXd coherence =
        model.coherence.size() == model.topics ? model.coherence : umass_coherence(model, corpus, top_n);
    nlohmann::ordered_json report;
    report["topics"] = model.topics;
    report["seed"] = model.seed;
    report["documents"] = corpus.documents.size();
    report["vocabulary"] = corpus.vocabulary.size();
    report["mean_coherence"] = coherence.mean();
    auto& items = report["items"] = nlohmann::ordered_json::array();
    for (int k = 0; k < model.topics; ++k) {
        nlohmann::ordered_json item;
        item["topic"] = k;
        auto& words = item["words"] = nlohmann::ordered_json::array();
        for (int w : model.top_words(k, top_n)) words.push_back(corpus.vocabulary[w]);
        item["coherence"] = coherence(k);
        items.push_back(std::move(item));
    }
    out << report.dump(2) << '\n';
}

}  // namespace mediaframe

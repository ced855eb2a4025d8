#ifndef MEDIAFRAME_TOPICS_HPP
#define MEDIAFRAME_TOPICS_HPP

// LDA over bill text: tokenization, collapsed Gibbs sampling, UMass coherence.

#include "mediaframe/core.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace mediaframe {

struct Corpus {
    std::vector<std::vector<int>> documents;  // token ids
    std::vector<std::string> vocabulary;      // sorted
    std::vector<std::string> doc_ids;
    int dropped_documents = 0;

    std::size_t token_count() const;
};

struct PreprocessOptions {
    std::set<std::string> stopwords = default_stopwords();
    std::size_t min_token_length = 3;
    int min_document_frequency = 2;

    static std::set<std::string> default_stopwords();
};

/// Lowercases, splits on non-alphanumerics, drops stopwords, short and rare tokens,
/// then empty documents. `doc_ids` defaults to "doc<i>". Throws EmptyCorpus.
Corpus preprocess(std::span<const std::string> texts, std::span<const std::string> doc_ids = {},
                  const PreprocessOptions& options = {});

struct LdaOptions {
    int topics = 9;
    double alpha = -1.0;  // negative means 50 / topics
    double beta = 0.01;
    int iterations = 1000;
    std::uint64_t seed = 1;
    /// Called after every sweep with the current smoothed estimates (slow; for checks).
    std::function<void(int sweep, const Eigen::MatrixXd& topic_word, const Eigen::MatrixXd& doc_topic)>
        on_sweep;
};

struct TopicModel {
    Eigen::MatrixXd topic_word;  // K x V, rows sum to 1
    Eigen::MatrixXd doc_topic;   // D x K, rows sum to 1, input document order
    int topics = 0;
    std::uint64_t seed = 0;
    Eigen::VectorXd coherence;   // filled by umass_coherence callers

    /// Word ids of a topic, most probable first (ties by id).
    std::vector<int> top_words(int topic, int n) const;
};

/// Collapsed Gibbs sampler. Documents are swept in doc_id order and each document
/// draws from its own stream seeded by (seed, doc_id), so the result does not depend
/// on input order. Throws EmptyCorpus, InvalidArgument.
TopicModel lda_fit(const Corpus& corpus, const LdaOptions& options = {});

/// Sum over ranked top-word pairs (m > l) of log((D(w_m, w_l) + 1) / D(w_l)).
Eigen::VectorXd umass_coherence(const TopicModel& model, const Corpus& corpus, int top_n = 10);

/// Fits every K and returns the one with the largest mean coherence (ties: smaller K).
int select_k(const Corpus& corpus, std::span<const int> k_range, const LdaOptions& base = {},
             int top_n = 10);

/// JSON report: per topic the top words and coherence.
void write_topic_report(std::ostream& out, const TopicModel& model, const Corpus& corpus,
                        int top_n = 10);

}  // namespace mediaframe

#endif  // MEDIAFRAME_TOPICS_HPP

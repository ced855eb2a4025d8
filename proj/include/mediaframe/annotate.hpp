#ifndef MEDIAFRAME_ANNOTATE_HPP
#define MEDIAFRAME_ANNOTATE_HPP

// Annotation through a pluggable text backend, plus agreement metrics.

#include "mediaframe/core.hpp"

#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mediaframe {

enum class TaskKind { PostSentiment, BillYear, ThemeMap };

struct FewShotExample {
    std::string input;
    std::string label;
};

struct AnnotationTask {
    TaskKind kind = TaskKind::PostSentiment;
    /// Placeholders: {examples}, {input}, {labels}.
    std::string prompt_template;
    std::vector<FewShotExample> few_shot_examples;
    std::vector<std::string> allowed_labels;
    int max_labels = 1;

    /// 1..5 attitude toward homeless people, one example per score.
    static AnnotationTask post_sentiment();
    /// Picks one of the two years of a legislative session.
    static AnnotationTask bill_year(int first_year, int second_year);
    /// Maps ten LDA keywords to at most three themes from `themes`.
    static AnnotationTask theme_map(std::vector<std::string> themes);

    std::string render(std::string_view input) const;
};

/// A parsed label; empty `values` means INVALID.
struct Label {
    std::vector<std::string> values;

    bool valid() const { return !values.empty(); }
    static Label invalid() { return {}; }
    bool operator==(const Label&) const = default;
};

/// Applies the task's reply grammar: surrounding whitespace, quotes and trailing
/// punctuation are stripped; every label must be allowed.
Label parse_reply(const AnnotationTask& task, std::string_view reply);

/// Text-in, text-out annotator. Implementations must be safe to call concurrently.
/// Transport failures surface as Error(BackendUnavailable).
class AnnotationBackend {
public:
    virtual ~AnnotationBackend() = default;
    virtual std::string send(const std::string& id, const std::string& prompt) = 0;
};

/// Always answers with the same reply.
class FixedReplyBackend final : public AnnotationBackend {
public:
    explicit FixedReplyBackend(std::string reply) : reply_(std::move(reply)) {}
    std::string send(const std::string&, const std::string&) override { return reply_; }

private:
    std::string reply_;
};

/// Deterministic keyword annotator that understands the three built-in prompts.
class LexiconStubBackend final : public AnnotationBackend {
public:
    std::string send(const std::string& id, const std::string& prompt) override;
};

/// Child process speaking newline-delimited JSON: `{"id","prompt"}` in, `{"id","reply"}` out.
/// The process is restarted after a transport failure, up to `max_restarts` times per request.
class ProcessBackend final : public AnnotationBackend {
public:
    explicit ProcessBackend(std::string command, int max_restarts = 2);
    ~ProcessBackend() override;
    ProcessBackend(const ProcessBackend&) = delete;
    ProcessBackend& operator=(const ProcessBackend&) = delete;

    std::string send(const std::string& id, const std::string& prompt) override;

private:
    void start();
    void stop();
    std::optional<std::string> exchange(const std::string& line);

    std::string command_;
    int max_restarts_;
    std::mutex mutex_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string pending_;
};

/// Serves requests from `in` to `out` using `backend`; the other end of ProcessBackend.
void serve_backend(AnnotationBackend& backend, std::istream& in, std::ostream& out);

struct BatchOptions {
    int max_in_flight = 4;
    int parse_retries = 1;
};

struct BatchResult {
    std::vector<Label> labels;
    std::size_t invalid = 0;      // unparseable after retries
    std::size_t unavailable = 0;  // backend failures
    std::vector<std::string> errors;  // per item, empty when fine
};

BatchResult annotate_batch(std::span<const std::string> items, const AnnotationTask& task,
                           AnnotationBackend& backend, const BatchOptions& options = {});

// ---------------------------------------------------------------------------

enum class DistanceMetric { Nominal, Ordinal, Interval };
std::string_view to_string(DistanceMetric m);

struct ReliabilityReport {
    double alpha = 1.0;
    DistanceMetric metric = DistanceMetric::Interval;
    int n_items = 0;   // items with at least two codings
    int n_coders = 0;
    double observed_disagreement = 0.0;
    double expected_disagreement = 0.0;
    std::optional<double> accuracy;
};

/// Krippendorff's alpha over an items x coders matrix (NaN = not coded).
/// Throws InsufficientCodings.
ReliabilityReport krippendorff_alpha(const Eigen::Ref<const Eigen::MatrixXd>& codings,
                                     DistanceMetric metric);

/// Share of exactly matching labels; INVALID is always wrong. Throws LengthMismatch.
double label_accuracy(std::span<const Label> labels, std::span<const Label> gold);

/// Items x themes binary units (rows) coded by [manual, model]. Where the two theme sets
/// of an item share any theme, the model row copies the manual one.
Eigen::MatrixXd theme_match_codings(std::span<const std::set<std::string>> manual,
                                    std::span<const std::set<std::string>> model,
                                    std::span<const std::string> themes);

}  // namespace mediaframe

#endif  // MEDIAFRAME_ANNOTATE_HPP

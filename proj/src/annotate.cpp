#include "mediaframe/annotate.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <csignal>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

namespace mediaframe {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string_view strip_decoration(std::string_view s) {
    s = trim(s);
    auto is_quote = [](char c) { return c == '"' || c == '\'' || c == '`'; };
    auto is_trailing = [&](char c) {
        return c == '.' || c == '!' || c == ',' || c == ';' || c == ':' || is_quote(c);
    };
    while (!s.empty() && is_quote(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_trailing(s.back())) s.remove_suffix(1);
    return trim(s);
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
        s.replace(pos, from.size(), to);
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> words_of(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

constexpr std::string_view kPostMarker = "\n\nPost: ";
constexpr std::string_view kExcerptMarker = "\n\nExcerpt: ";
constexpr std::string_view kWordsMarker = "\n\nlist of words: ";
constexpr std::string_view kThemesMarker = "you can ignore the prefix in these cases): [";

}  // namespace

AnnotationTask AnnotationTask::post_sentiment() {
    AnnotationTask t;
    t.kind = TaskKind::PostSentiment;
    t.prompt_template =
        "You will be given a post on Twitter. Analyze the post and give me a category for its "
        "attitude towards homeless individuals. You are specifically analyzing sentiment towards "
        "the homeless, not the general sentiment of the post. (1. Strongly anti-homeless, 2. "
        "Somewhat anti-homeless, 3. Neutral to homeless/unrelated to homeless individuals, 4. "
        "Somewhat pro-homeless, 5. Strongly pro-homeless). Just return a number and nothing else "
        "(1, 2, 3, 4, or 5). Here is an example of each category: {examples}" +
        std::string(kPostMarker) + "{input}";
    t.few_shot_examples = {
        {"Can U put out a video letting us know what 2 do 2 protect ourselves from the "
         "insane/drugged out homeless men on the streets?",
         "1"},
        {"Your city or state might be one Democratic vote away from your own homeless "
         "encampment on wheels!",
         "2"},
        {"Cities across California and the nation are experiencing a rise in homelessness", "3"},
        {"They'd rather cover the city in spikes like it's bowser's castle than build homeless "
         "shelters",
         "4"},
        {"I REALLY hate the way people treat the homeless. Can you imagine how it feels to be "
         "treated with such disdain day in & day out?",
         "5"},
    };
    t.allowed_labels = {"1", "2", "3", "4", "5"};
    return t;
}

AnnotationTask AnnotationTask::bill_year(int first_year, int second_year) {
    AnnotationTask t;
    t.kind = TaskKind::BillYear;
    t.prompt_template =
        "return the year (either session year 1 or year 2) the bill was introduced based on this "
        "excerpt of the bill, ONLY the number and no text, if it cannot be located, return the "
        "closest year with ONLY the number and it can ONLY be {labels}" +
        std::string(kExcerptMarker) + "{input}";
    t.allowed_labels = {std::to_string(first_year), std::to_string(second_year)};
    return t;
}

AnnotationTask AnnotationTask::theme_map(std::vector<std::string> themes) {
    AnnotationTask t;
    t.kind = TaskKind::ThemeMap;
    t.prompt_template =
        "You will be given a list of 10 related words. These are words that an LDA model "
        "extracted from state bills regarding homelessness. Please pick subtopics from the list "
        "of subtopics provided below. You can choose up to 3 subtopics. Do not provide any "
        "additional description: just have 3 subtopics from the list below separated by commas. "
        "HARD DISCLAIMER: PLEASE TRY TO ANSWER WITH A SUBTOPIC OF HOMELESSNESS, rather than just "
        "broadly describing homelessness. Here is an example categorization: {examples} Here is "
        "the list of subtopics from which you must choose (some of them have irrelevant "
        "prefixes; " +
        std::string(kThemesMarker) + "{labels}]" + std::string(kWordsMarker) + "{input}";
    t.few_shot_examples = {
        {"custody inmate adult department person correction service court board subsection "
         "program public employee rule read",
         "SOC_GENERALCRIME, ARREST, SOC_POINTSOFOINTEREST_PRISON"},
    };
    t.allowed_labels = std::move(themes);
    t.max_labels = 3;
    return t;
}

std::string AnnotationTask::render(std::string_view input) const {
    std::string examples;
    for (std::size_t i = 0; i < few_shot_examples.size(); ++i) {
        const auto& ex = few_shot_examples[i];
        if (i) examples += ' ';
        switch (kind) {
            case TaskKind::PostSentiment:
                examples += "Category " + ex.label + ": " + ex.input;
                break;
            case TaskKind::ThemeMap:
                examples += "(list of words: " + ex.input + ", Output topics: " + ex.label + ")";
                break;
            case TaskKind::BillYear:
                examples += "(excerpt: " + ex.input + ", year: " + ex.label + ")";
                break;
        }
    }
    std::string labels;
    const std::string_view sep = kind == TaskKind::BillYear ? " or " : ", ";
    for (std::size_t i = 0; i < allowed_labels.size(); ++i) {
        if (i) labels += sep;
        labels += allowed_labels[i];
    }
    std::string out = prompt_template;
    replace_all(out, "{examples}", examples);
    replace_all(out, "{labels}", labels);
    replace_all(out, "{input}", input);
    return out;
}

Label parse_reply(const AnnotationTask& task, std::string_view reply) {
    auto allowed = [&](std::string_view v) {
        return std::find(task.allowed_labels.begin(), task.allowed_labels.end(), v) !=
               task.allowed_labels.end();
    };
    if (task.kind != TaskKind::ThemeMap) {
        const auto v = strip_decoration(reply);
        if (v.empty() || !allowed(v)) return Label::invalid();
        return {{std::string(v)}};
    }
    Label out;
    std::string_view rest = trim(reply);
    while (true) {
        const auto comma = rest.find(',');
        const auto item = strip_decoration(rest.substr(0, comma));
        if (item.empty() || !allowed(item)) return Label::invalid();
        if (std::find(out.values.begin(), out.values.end(), item) == out.values.end())
            out.values.emplace_back(item);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    if (static_cast<int>(out.values.size()) > task.max_labels) return Label::invalid();
    return out;
}

// ---------------------------------------------------------------------------

std::string LexiconStubBackend::send(const std::string&, const std::string& prompt) {
    if (const auto pos = prompt.rfind(kPostMarker); pos != std::string::npos) {
        static const std::set<std::string> anti = {
            "insane", "drugged", "crime", "criminal", "dangerous", "filthy", "lazy", "trash",
            "junkie", "junkies", "addicts", "gross", "disgusting", "threat", "scary", "vagrant",
            "vagrants", "encampment", "encampments", "menace", "remove", "sweep"};
        static const std::set<std::string> pro = {
            "help", "support", "compassion", "care", "shelter", "shelters", "housing", "dignity",
            "donate", "volunteer", "kindness", "rights", "humane", "treat", "neighbors", "feed",
            "love", "solidarity", "aid", "advocate"};
        int score = 0;
        for (const auto& w : words_of(std::string_view(prompt).substr(pos + kPostMarker.size()))) {
            if (anti.count(w)) --score;
            if (pro.count(w)) ++score;
        }
        return std::to_string(3 + std::clamp(score, -2, 2));
    }
    if (const auto pos = prompt.rfind(kExcerptMarker); pos != std::string::npos) {
        const std::string_view head(prompt.data(), pos);
        const auto years_at = head.rfind("ONLY be ");
        std::vector<std::string> choices;
        if (years_at != std::string_view::npos) choices = words_of(head.substr(years_at + 8));
        if (choices.empty()) return "unknown";
        for (const auto& w : words_of(std::string_view(prompt).substr(pos + kExcerptMarker.size())))
            if (std::find(choices.begin(), choices.end(), w) != choices.end()) return w;
        return choices.front();
    }
    if (const auto pos = prompt.rfind(kWordsMarker); pos != std::string::npos) {
        const auto list_at = prompt.find(kThemesMarker);
        if (list_at == std::string::npos) return "";
        const auto list_begin = list_at + kThemesMarker.size();
        const auto list_end = prompt.find(']', list_begin);
        std::vector<std::string> themes;
        std::stringstream ss(prompt.substr(list_begin, list_end - list_begin));
        for (std::string item; std::getline(ss, item, ',');)
            if (auto t = trim(item); !t.empty()) themes.emplace_back(t);
        const auto words = words_of(std::string_view(prompt).substr(pos + kWordsMarker.size()));
        const std::set<std::string> word_set(words.begin(), words.end());

        std::vector<std::pair<int, std::size_t>> scored;  // (-overlap, list position)
        for (std::size_t i = 0; i < themes.size(); ++i) {
            int overlap = 0;
            for (const auto& part : words_of(lower(themes[i])))
                if (part.size() >= 3 && word_set.count(part)) ++overlap;
            if (overlap > 0) scored.emplace_back(-overlap, i);
        }
        std::sort(scored.begin(), scored.end());
        std::string reply;
        for (std::size_t i = 0; i < scored.size() && i < 3; ++i) {
            if (i) reply += ", ";
            reply += themes[scored[i].second];
        }
        if (reply.empty() && !themes.empty()) reply = themes.front();
        return reply;
    }
    return "";
}

// ---------------------------------------------------------------------------

ProcessBackend::ProcessBackend(std::string command, int max_restarts)
    : command_(std::move(command)), max_restarts_(max_restarts) {
    std::signal(SIGPIPE, SIG_IGN);
    start();
}

ProcessBackend::~ProcessBackend() { stop(); }

void ProcessBackend::start() {
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0) throw Error(ErrorCode::BackendUnavailable, "pipe failed");
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw Error(ErrorCode::BackendUnavailable, "pipe failed");
    }
    const pid_t pid = fork();
    if (pid < 0) throw Error(ErrorCode::BackendUnavailable, "fork failed");
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    pending_.clear();
}

void ProcessBackend::stop() {
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        int status = 0;
        if (waitpid(pid_, &status, WNOHANG) == 0) {
            kill(pid_, SIGTERM);
            waitpid(pid_, &status, 0);
        }
    }
    pid_ = -1;
}

std::optional<std::string> ProcessBackend::exchange(const std::string& line) {
    std::size_t written = 0;
    while (written < line.size()) {
        const ssize_t n = write(to_child_, line.data() + written, line.size() - written);
        if (n <= 0) return std::nullopt;
        written += static_cast<std::size_t>(n);
    }
    while (true) {
        if (const auto nl = pending_.find('\n'); nl != std::string::npos) {
            std::string reply = pending_.substr(0, nl);
            pending_.erase(0, nl + 1);
            return reply;
        }
        char buf[4096];
        const ssize_t n = read(from_child_, buf, sizeof buf);
        if (n <= 0) return std::nullopt;
        pending_.append(buf, static_cast<std::size_t>(n));
    }
}

std::string ProcessBackend::send(const std::string& id, const std::string& prompt) {
    std::lock_guard lock(mutex_);
    const std::string request = nlohmann::json{{"id", id}, {"prompt", prompt}}.dump() + "\n";
    std::string failure = "no response";
    for (int attempt = 0; attempt <= max_restarts_; ++attempt) {
        if (pid_ < 0) {
            try {
                start();
            } catch (const Error& e) {
                failure = e.what();
                continue;
            }
        }
        if (auto line = exchange(request)) {
            const auto msg = nlohmann::json::parse(*line, nullptr, false);
            if (!msg.is_discarded() && msg.is_object() && msg.value("id", "") == id &&
                msg.contains("reply") && msg["reply"].is_string())
                return msg["reply"].get<std::string>();
            failure = "malformed response line";
        } else {
            failure = "backend process closed the pipe";
        }
        stop();
    }
    throw Error(ErrorCode::BackendUnavailable, failure);
}

void serve_backend(AnnotationBackend& backend, std::istream& in, std::ostream& out) {
    for (std::string line; std::getline(in, line);) {
        if (trim(line).empty()) continue;
        const auto msg = nlohmann::json::parse(line, nullptr, false);
        if (msg.is_discarded() || !msg.is_object()) continue;
        const std::string id = msg.value("id", "");
        const std::string reply = backend.send(id, msg.value("prompt", ""));
        out << nlohmann::json{{"id", id}, {"reply", reply}}.dump() << '\n' << std::flush;
    }
}

BatchResult annotate_batch(std::span<const std::string> items, const AnnotationTask& task,
                           AnnotationBackend& backend, const BatchOptions& options) {
    BatchResult result;
    result.labels.resize(items.size());
    result.errors.resize(items.size());
    std::vector<char> unavailable(items.size(), 0);

    auto work = [&](std::size_t i) {
        const std::string prompt = task.render(items[i]);
        try {
            for (int attempt = 0; attempt <= options.parse_retries; ++attempt) {
                const std::string id =
                    "item-" + std::to_string(i) + (attempt ? "-retry" + std::to_string(attempt) : "");
                Label label = parse_reply(task, backend.send(id, prompt));
                if (label.valid()) {
                    result.labels[i] = std::move(label);
                    return;
                }
            }
            result.errors[i] = "unparseable reply";
        } catch (const Error& e) {
            if (e.code() != ErrorCode::BackendUnavailable) throw;
            unavailable[i] = 1;
            result.errors[i] = e.what();
        }
    };

    const std::size_t workers =
        std::min<std::size_t>(std::max(1, options.max_in_flight), items.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < items.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < items.size();) {
                    try {
                        work(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (result.labels[i].valid()) continue;
        if (unavailable[i])
            ++result.unavailable;
        else
            ++result.invalid;
    }
    return result;
}

// ---------------------------------------------------------------------------

std::string_view to_string(DistanceMetric m) {
    switch (m) {
        case DistanceMetric::Nominal: return "nominal";
        case DistanceMetric::Ordinal: return "ordinal";
        case DistanceMetric::Interval: return "interval";
    }
    return "interval";
}

ReliabilityReport krippendorff_alpha(const Eigen::Ref<const Eigen::MatrixXd>& codings,
                                     DistanceMetric metric) {
    if (codings.cols() < 2) throw Error(ErrorCode::InsufficientCodings, "need at least two coders");

    std::vector<double> values;
    for (Eigen::Index u = 0; u < codings.rows(); ++u) {
        if ((codings.row(u).array() == codings.row(u).array()).count() < 2) continue;
        for (Eigen::Index c = 0; c < codings.cols(); ++c)
            if (!is_missing(codings(u, c))) values.push_back(codings(u, c));
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (values.empty()) throw Error(ErrorCode::InsufficientCodings, "no item has two codings");
    const auto v = static_cast<Eigen::Index>(values.size());
    auto index_of = [&](double x) {
        return std::lower_bound(values.begin(), values.end(), x) - values.begin();
    };

    ReliabilityReport report;
    report.metric = metric;
    report.n_coders = static_cast<int>(codings.cols());

    Eigen::MatrixXd coincidence = Eigen::MatrixXd::Zero(v, v);
    for (Eigen::Index u = 0; u < codings.rows(); ++u) {
        std::vector<Eigen::Index> present;
        for (Eigen::Index c = 0; c < codings.cols(); ++c)
            if (!is_missing(codings(u, c))) present.push_back(index_of(codings(u, c)));
        const auto m = static_cast<double>(present.size());
        if (present.size() < 2) continue;
        ++report.n_items;
        for (std::size_t i = 0; i < present.size(); ++i)
            for (std::size_t j = 0; j < present.size(); ++j)
                if (i != j) coincidence(present[i], present[j]) += 1.0 / (m - 1.0);
    }
    const Eigen::VectorXd marginals = coincidence.rowwise().sum();
    const double n = marginals.sum();

    Eigen::MatrixXd delta2 = Eigen::MatrixXd::Zero(v, v);
    for (Eigen::Index c = 0; c < v; ++c) {
        for (Eigen::Index k = 0; k < v; ++k) {
            if (c == k) continue;
            switch (metric) {
                case DistanceMetric::Nominal:
                    delta2(c, k) = 1.0;
                    break;
                case DistanceMetric::Interval:
                    delta2(c, k) = (values[c] - values[k]) * (values[c] - values[k]);
                    break;
                case DistanceMetric::Ordinal: {
                    const Eigen::Index lo = std::min(c, k);
                    const Eigen::Index hi = std::max(c, k);
                    const double d = marginals.segment(lo, hi - lo + 1).sum() -
                                     0.5 * (marginals(lo) + marginals(hi));
                    delta2(c, k) = d * d;
                    break;
                }
            }
        }
    }
    report.observed_disagreement = coincidence.cwiseProduct(delta2).sum() / n;
    report.expected_disagreement =
        (marginals * marginals.transpose()).cwiseProduct(delta2).sum() / (n * (n - 1.0));
    report.alpha = report.expected_disagreement > 0.0
                       ? 1.0 - report.observed_disagreement / report.expected_disagreement
                       : 1.0;
    return report;
}

double label_accuracy(std::span<const Label> labels, std::span<const Label> gold) {
    if (labels.size() != gold.size()) throw Error(ErrorCode::LengthMismatch, "label_accuracy");
    if (labels.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i].valid() && labels[i] == gold[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

Eigen::MatrixXd theme_match_codings(std::span<const std::set<std::string>> manual,
                                    std::span<const std::set<std::string>> model,
                                    std::span<const std::string> themes) {
    if (manual.size() != model.size()) throw Error(ErrorCode::LengthMismatch, "theme_match_codings");
    const auto t = static_cast<Eigen::Index>(themes.size());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(manual.size()) * t, 2);
    for (std::size_t i = 0; i < manual.size(); ++i) {
        const bool overlap = std::any_of(manual[i].begin(), manual[i].end(),
                                         [&](const std::string& s) { return model[i].count(s) != 0; });
        const auto& model_set = overlap ? manual[i] : model[i];
        for (Eigen::Index j = 0; j < t; ++j) {
            const auto row = static_cast<Eigen::Index>(i) * t + j;
            out(row, 0) = manual[i].count(themes[j]) ? 1.0 : 0.0;
            out(row, 1) = model_set.count(themes[j]) ? 1.0 : 0.0;
        }
    }
    return out;
}

}  // namespace mediaframe

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tweetscope::annotate {

class LabelSet {
public:
    LabelSet() = default;
    explicit LabelSet(std::vector<std::string> labels);  // throws ConfigError on empty/duplicate

    // opinion, news/quotes, satire/jokes, complaint/blame, solution, neutral
    static LabelSet defaults();

    const std::vector<std::string>& labels() const { return labels_; }
    bool contains(const std::string& label) const;
    std::size_t index_of(const std::string& label) const;
    std::size_t size() const { return labels_.size(); }

private:
    std::vector<std::string> labels_;
};

enum class SessionStatus { labeling, adjudicating, closed };
std::string_view to_string(SessionStatus s);

using ClusterId = std::uint32_t;

struct KappaResult {
    std::optional<double> kappa;  // nullopt when expected agreement is 1
    double observed_agreement = 0.0;
    double expected_agreement = 0.0;
    std::vector<std::vector<std::uint64_t>> confusion;  // rows: first annotator
    std::vector<std::string> labels;
    std::uint64_t n_items = 0;
};

// kappa = (n * agree - sum r_i c_i) / (n^2 - sum r_i c_i), evaluated on the
// integer counts so exact fixtures stay exact in floating point.
KappaResult cohen_kappa(const std::vector<std::vector<std::uint64_t>>& confusion);

struct CategoryEstimate {
    std::map<std::string, double> per_label_share;
    std::map<ClusterId, std::map<std::string, double>> per_cluster_breakdown;
};

// share(label) = sum over clusters of (label ratio in the cluster's sample) x (cluster ratio).
CategoryEstimate weighted_estimate(const std::map<ClusterId, std::map<std::string, double>>& per_cluster,
                                   const std::map<ClusterId, double>& cluster_ratios);

struct DisagreementItem {
    std::string tweet_id;
    ClusterId cluster = 0;
    std::string text;
    std::vector<std::string> candidate_labels;  // sorted, no attribution
};

struct SessionSpec {
    std::string session_id;
    std::map<ClusterId, std::vector<std::string>> sample;
    std::vector<std::string> annotators;
    LabelSet label_set = LabelSet::defaults();
    std::map<ClusterId, double> cluster_ratios;
    std::map<std::string, std::string> texts;  // tweet id -> text shown to annotators
};

class AnnotationSession {
public:
    // Exactly two annotators, non-empty sample, no tweet in two clusters.
    explicit AnnotationSession(SessionSpec spec);

    const std::string& id() const { return spec_.session_id; }
    SessionStatus status() const { return status_; }
    const SessionSpec& spec() const { return spec_; }
    const std::vector<std::string>& annotators() const { return spec_.annotators; }
    const LabelSet& label_set() const { return spec_.label_set; }
    std::size_t item_count() const { return order_.size(); }
    // Sampled tweet ids in (cluster, tweet id) order.
    const std::vector<std::string>& items() const { return order_; }
    ClusterId cluster_of(const std::string& tweet_id) const;
    std::string text_of(const std::string& tweet_id) const;

    // Last write wins while labeling.
    void submit_label(const std::string& annotator, const std::string& tweet_id, const std::string& label);

    // Only the asking annotator's own labels.
    std::optional<std::string> own_label(const std::string& annotator, const std::string& tweet_id) const;
    std::size_t labeled_count(const std::string& annotator) const;
    std::optional<std::string> next_unlabeled(const std::string& annotator) const;
    bool labeling_complete() const;

    // Requires every item doubly labeled. Auto-adjudicates agreed items,
    // moves to adjudicating (or straight to closed when nothing disagrees)
    // and returns the disagreed ids. In later states returns those still open.
    std::vector<std::string> disagreement_queue();
    std::vector<DisagreementItem> pending_disagreements() const;

    void adjudicate(const std::string& tweet_id, const std::string& final_label);
    std::optional<std::string> final_label(const std::string& tweet_id) const;

    // Over items labeled by both annotators.
    KappaResult cohen_kappa() const;
    CategoryEstimate weighted_category_estimate() const;  // closed sessions only

    void write_labels_csv(std::ostream& out) const;

private:
    bool is_annotator(const std::string& a) const;
    std::optional<std::string> label_of(std::size_t annotator, const std::string& tweet_id) const;

    SessionSpec spec_;
    SessionStatus status_ = SessionStatus::labeling;
    std::vector<std::string> order_;
    std::map<std::string, ClusterId> cluster_of_;
    std::vector<std::map<std::string, std::string>> labels_;  // per annotator
    std::map<std::string, std::string> adjudicated_;
    std::vector<std::string> disagreed_;
};

void write_estimate_csv(std::ostream& out, const CategoryEstimate& estimate, const LabelSet& labels);
nlohmann::json to_json(const KappaResult& k);
nlohmann::json to_json(const CategoryEstimate& e);

// Append-only JSON-lines event log per session, replayed on open. Writes to
// one session are serialized; reads return consistent snapshots.
class SessionStore {
public:
    explicit SessionStore(std::filesystem::path dir);

    AnnotationSession create(SessionSpec spec);
    AnnotationSession snapshot(const std::string& session_id);
    bool exists(const std::string& session_id);

    AnnotationSession submit_label(const std::string& session_id, const std::string& annotator,
                                   const std::string& tweet_id, const std::string& label);
    std::vector<std::string> open_adjudication(const std::string& session_id);
    AnnotationSession adjudicate(const std::string& session_id, const std::string& tweet_id,
                                 const std::string& final_label);

    std::filesystem::path log_path(const std::string& session_id) const;
    static AnnotationSession replay(const std::filesystem::path& log);

private:
    struct Entry {
        std::mutex mutex;
        std::optional<AnnotationSession> session;
    };
    std::shared_ptr<Entry> entry(const std::string& session_id);
    void append(const std::string& session_id, const nlohmann::json& event);

    std::filesystem::path dir_;
    std::mutex entries_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> entries_;
};

}  // namespace tweetscope::annotate

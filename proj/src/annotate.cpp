#include "tweetscope/annotate.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <set>

#include "tweetscope/date.hpp"
#include "tweetscope/error.hpp"
#include "tweetscope/util.hpp"

namespace tweetscope::annotate {

using nlohmann::json;

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw ConfigError("label set is empty");
    std::set<std::string> seen;
    for (const auto& l : labels_) {
        if (l.empty()) throw ConfigError("label set contains an empty label");
        if (!seen.insert(l).second) throw ConfigError("label set repeats '" + l + "'");
    }
}

LabelSet LabelSet::defaults() {
    return LabelSet({"opinion", "news/quotes", "satire/jokes", "complaint/blame", "solution", "neutral"});
}

bool LabelSet::contains(const std::string& label) const {
    return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t LabelSet::index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw ConfigError("unknown label '" + label + "'");
    return static_cast<std::size_t>(it - labels_.begin());
}

std::string_view to_string(SessionStatus s) {
    switch (s) {
        case SessionStatus::labeling: return "labeling";
        case SessionStatus::adjudicating: return "adjudicating";
        case SessionStatus::closed: return "closed";
    }
    return "labeling";
}

KappaResult cohen_kappa(const std::vector<std::vector<std::uint64_t>>& confusion) {
    KappaResult r;
    r.confusion = confusion;
    const std::size_t L = confusion.size();
    std::vector<std::uint64_t> rows(L, 0), cols(L, 0);
    std::uint64_t agree = 0;
    for (std::size_t i = 0; i < L; ++i) {
        if (confusion[i].size() != L) throw ConfigError("kappa: confusion matrix must be square");
        for (std::size_t j = 0; j < L; ++j) {
            rows[i] += confusion[i][j];
            cols[j] += confusion[i][j];
            r.n_items += confusion[i][j];
        }
        agree += confusion[i][i];
    }
    if (r.n_items == 0) throw StateError("kappa: no doubly-labeled items");
    std::uint64_t chance = 0;
    for (std::size_t i = 0; i < L; ++i) chance += rows[i] * cols[i];
    const auto n = static_cast<double>(r.n_items);
    const double n2 = n * n;
    r.observed_agreement = static_cast<double>(agree) / n;
    r.expected_agreement = static_cast<double>(chance) / n2;
    const std::uint64_t n_sq = r.n_items * r.n_items;
    if (chance != n_sq) {
        const double num = static_cast<double>(static_cast<std::int64_t>(r.n_items * agree) -
                                               static_cast<std::int64_t>(chance));
        r.kappa = num / static_cast<double>(n_sq - chance);
    }
    return r;
}

CategoryEstimate weighted_estimate(const std::map<ClusterId, std::map<std::string, double>>& per_cluster,
                                   const std::map<ClusterId, double>& cluster_ratios) {
    CategoryEstimate e;
    e.per_cluster_breakdown = per_cluster;
    for (const auto& [cluster, shares] : per_cluster) {
        auto w = cluster_ratios.find(cluster);
        if (w == cluster_ratios.end())
            throw ConfigError("estimate: no cluster ratio for cluster " + std::to_string(cluster));
        for (const auto& [label, share] : shares) e.per_label_share[label] += share * w->second;
    }
    return e;
}

namespace {

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Numeric ids compare numerically, anything else lexicographically.
bool id_less(const std::string& a, const std::string& b) {
    if (all_digits(a) && all_digits(b) && a.size() != b.size()) return a.size() < b.size();
    return a < b;
}

}  // namespace

AnnotationSession::AnnotationSession(SessionSpec spec) : spec_(std::move(spec)) {
    if (spec_.annotators.size() != 2)
        throw ConfigError("a session needs exactly two annotators, got " + std::to_string(spec_.annotators.size()));
    if (spec_.annotators[0].empty() || spec_.annotators[1].empty() || spec_.annotators[0] == spec_.annotators[1])
        throw ConfigError("annotator ids must be distinct and non-empty");
    for (const auto& [cluster, ids] : spec_.sample) {
        auto sorted = ids;
        std::sort(sorted.begin(), sorted.end(), id_less);
        for (const auto& id : sorted) {
            if (id.empty()) throw ConfigError("sample contains an empty tweet id");
            if (!cluster_of_.emplace(id, cluster).second)
                throw ConfigError("tweet " + id + " appears more than once in the sample");
            order_.push_back(id);
        }
    }
    if (order_.empty()) throw ConfigError("sample is empty");
    labels_.resize(2);
}

bool AnnotationSession::is_annotator(const std::string& a) const {
    return a == spec_.annotators[0] || a == spec_.annotators[1];
}

ClusterId AnnotationSession::cluster_of(const std::string& tweet_id) const {
    auto it = cluster_of_.find(tweet_id);
    if (it == cluster_of_.end()) throw ConfigError("tweet " + tweet_id + " is not in the sample");
    return it->second;
}

std::string AnnotationSession::text_of(const std::string& tweet_id) const {
    auto it = spec_.texts.find(tweet_id);
    return it == spec_.texts.end() ? std::string{} : it->second;
}

void AnnotationSession::submit_label(const std::string& annotator, const std::string& tweet_id,
                                     const std::string& label) {
    if (status_ != SessionStatus::labeling)
        throw StateError("session " + id() + " is " + std::string(to_string(status_)) + ", not labeling");
    if (!is_annotator(annotator)) throw ConfigError("unknown annotator '" + annotator + "'");
    if (!cluster_of_.contains(tweet_id)) throw ConfigError("tweet " + tweet_id + " is not in the sample");
    if (!spec_.label_set.contains(label)) throw ConfigError("label '" + label + "' is not in the label set");
    labels_[annotator == spec_.annotators[0] ? 0 : 1][tweet_id] = label;
}

std::optional<std::string> AnnotationSession::label_of(std::size_t annotator, const std::string& tweet_id) const {
    auto it = labels_[annotator].find(tweet_id);
    if (it == labels_[annotator].end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> AnnotationSession::own_label(const std::string& annotator,
                                                        const std::string& tweet_id) const {
    if (!is_annotator(annotator)) throw ConfigError("unknown annotator '" + annotator + "'");
    return label_of(annotator == spec_.annotators[0] ? 0 : 1, tweet_id);
}

std::size_t AnnotationSession::labeled_count(const std::string& annotator) const {
    if (!is_annotator(annotator)) throw ConfigError("unknown annotator '" + annotator + "'");
    return labels_[annotator == spec_.annotators[0] ? 0 : 1].size();
}

std::optional<std::string> AnnotationSession::next_unlabeled(const std::string& annotator) const {
    if (!is_annotator(annotator)) throw ConfigError("unknown annotator '" + annotator + "'");
    const auto& mine = labels_[annotator == spec_.annotators[0] ? 0 : 1];
    for (const auto& id : order_)
        if (!mine.contains(id)) return id;
    return std::nullopt;
}

bool AnnotationSession::labeling_complete() const {
    return labels_[0].size() == order_.size() && labels_[1].size() == order_.size();
}

std::vector<std::string> AnnotationSession::disagreement_queue() {
    if (status_ == SessionStatus::labeling) {
        if (!labeling_complete()) {
            // no per-annotator detail: this reaches the annotators themselves
            const auto open = std::count_if(order_.begin(), order_.end(), [&](const std::string& id) {
                return !labels_[0].contains(id) || !labels_[1].contains(id);
            });
            throw StateError("labeling incomplete: " + std::to_string(open) + " of " + std::to_string(order_.size()) +
                             " items still need both labels");
        }
        std::vector<std::string> disagreed;
        for (const auto& id : order_) {
            const auto& a = labels_[0].at(id);
            if (a == labels_[1].at(id))
                adjudicated_[id] = a;
            else
                disagreed.push_back(id);
        }
        disagreed_ = disagreed;
        status_ = disagreed_.empty() ? SessionStatus::closed : SessionStatus::adjudicating;
        return disagreed;
    }
    std::vector<std::string> open;
    for (const auto& id : disagreed_)
        if (!adjudicated_.contains(id)) open.push_back(id);
    return open;
}

std::vector<DisagreementItem> AnnotationSession::pending_disagreements() const {
    std::vector<DisagreementItem> items;
    if (status_ != SessionStatus::adjudicating) return items;
    for (const auto& id : disagreed_) {
        if (adjudicated_.contains(id)) continue;
        std::vector<std::string> pair{labels_[0].at(id), labels_[1].at(id)};
        std::sort(pair.begin(), pair.end());
        items.push_back({id, cluster_of_.at(id), text_of(id), std::move(pair)});
    }
    return items;
}

void AnnotationSession::adjudicate(const std::string& tweet_id, const std::string& final_label) {
    if (status_ != SessionStatus::adjudicating)
        throw StateError("session " + id() + " is " + std::string(to_string(status_)) + ", not adjudicating");
    if (std::find(disagreed_.begin(), disagreed_.end(), tweet_id) == disagreed_.end())
        throw StateError("tweet " + tweet_id + " is not a disagreement");
    if (!spec_.label_set.contains(final_label))
        throw ConfigError("label '" + final_label + "' is not in the label set");
    adjudicated_[tweet_id] = final_label;
    if (adjudicated_.size() == order_.size()) status_ = SessionStatus::closed;
}

std::optional<std::string> AnnotationSession::final_label(const std::string& tweet_id) const {
    auto it = adjudicated_.find(tweet_id);
    if (it == adjudicated_.end()) return std::nullopt;
    return it->second;
}

KappaResult AnnotationSession::cohen_kappa() const {
    const auto& set = spec_.label_set;
    std::vector<std::vector<std::uint64_t>> confusion(set.size(), std::vector<std::uint64_t>(set.size(), 0));
    for (const auto& id : order_) {
        auto a = label_of(0, id);
        auto b = label_of(1, id);
        if (a && b) ++confusion[set.index_of(*a)][set.index_of(*b)];
    }
    auto result = annotate::cohen_kappa(confusion);
    result.labels = set.labels();
    return result;
}

CategoryEstimate AnnotationSession::weighted_category_estimate() const {
    if (status_ != SessionStatus::closed) throw StateError("session " + id() + " is not closed");
    std::map<ClusterId, std::map<std::string, double>> per_cluster;
    for (const auto& [cluster, ids] : spec_.sample) {
        auto& shares = per_cluster[cluster];
        for (const auto& l : spec_.label_set.labels()) shares[l] = 0.0;
        std::map<std::string, std::size_t> counts;
        for (const auto& id : ids) ++counts[adjudicated_.at(id)];
        for (const auto& [label, c] : counts)
            shares[label] = static_cast<double>(c) / static_cast<double>(ids.size());
    }
    return weighted_estimate(per_cluster, spec_.cluster_ratios);
}

void AnnotationSession::write_labels_csv(std::ostream& out) const {
    out << "tweet_id,cluster_id,annotator_a_label,annotator_b_label,final_label\n";
    for (const auto& id : order_)
        out << id << ',' << cluster_of_.at(id) << ',' << label_of(0, id).value_or("") << ','
            << label_of(1, id).value_or("") << ',' << final_label(id).value_or("") << '\n';
}

void write_estimate_csv(std::ostream& out, const CategoryEstimate& estimate, const LabelSet& labels) {
    out << "label,share\n";
    for (const auto& l : labels.labels()) {
        auto it = estimate.per_label_share.find(l);
        out << l << ',' << format_double(it == estimate.per_label_share.end() ? 0.0 : it->second) << '\n';
    }
}

json to_json(const KappaResult& k) {
    return {{"kappa", k.kappa ? json(*k.kappa) : json(nullptr)},
            {"defined", k.kappa.has_value()},
            {"observed_agreement", k.observed_agreement},
            {"expected_agreement", k.expected_agreement},
            {"n_items", k.n_items},
            {"labels", k.labels},
            {"confusion", k.confusion}};
}

json to_json(const CategoryEstimate& e) {
    json clusters = json::object();
    for (const auto& [c, shares] : e.per_cluster_breakdown) clusters[std::to_string(c)] = shares;
    return {{"per_label_share", e.per_label_share}, {"per_cluster_breakdown", clusters}};
}

// ---- event log ----

namespace {

std::string now_iso() {
    return format_timestamp(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

void validate_session_id(const std::string& id) {
    if (id.empty() || id.size() > 128 || !std::all_of(id.begin(), id.end(), [](char c) {
            return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
        }))
        throw ConfigError("session id must match [A-Za-z0-9_-]{1,128}");
}

json spec_to_json(const SessionSpec& s) {
    json sample = json::object();
    for (const auto& [c, ids] : s.sample) sample[std::to_string(c)] = ids;
    json ratios = json::object();
    for (const auto& [c, r] : s.cluster_ratios) ratios[std::to_string(c)] = r;
    return {{"session_id", s.session_id}, {"annotators", s.annotators}, {"label_set", s.label_set.labels()},
            {"sample", sample},           {"cluster_ratios", ratios},   {"texts", s.texts}};
}

SessionSpec spec_from_json(const json& j) {
    SessionSpec s;
    s.session_id = j.at("session_id").get<std::string>();
    s.annotators = j.at("annotators").get<std::vector<std::string>>();
    s.label_set = LabelSet(j.at("label_set").get<std::vector<std::string>>());
    for (const auto& [c, ids] : j.at("sample").items())
        s.sample[static_cast<ClusterId>(std::stoul(c))] = ids.get<std::vector<std::string>>();
    for (const auto& [c, r] : j.at("cluster_ratios").items())
        s.cluster_ratios[static_cast<ClusterId>(std::stoul(c))] = r.get<double>();
    s.texts = j.value("texts", std::map<std::string, std::string>{});
    return s;
}

void apply_event(std::optional<AnnotationSession>& session, const json& ev) {
    const auto type = ev.at("event").get<std::string>();
    if (type == "create") {
        if (session) throw InputError("duplicate create event");
        session.emplace(spec_from_json(ev.at("spec")));
        return;
    }
    if (!session) throw InputError("event before create");
    if (type == "label")
        session->submit_label(ev.at("annotator"), ev.at("tweet_id"), ev.at("label"));
    else if (type == "open_adjudication")
        session->disagreement_queue();
    else if (type == "adjudicate")
        session->adjudicate(ev.at("tweet_id"), ev.at("label"));
    else
        throw InputError("unknown event '" + type + "'");
}

}  // namespace

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path SessionStore::log_path(const std::string& session_id) const {
    validate_session_id(session_id);
    return dir_ / (session_id + ".jsonl");
}

AnnotationSession SessionStore::replay(const std::filesystem::path& log) {
    std::ifstream in(log);
    if (!in) throw InputError("cannot open session log " + log.string());
    std::optional<AnnotationSession> session;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            apply_event(session, json::parse(line));
        } catch (const json::exception& e) {
            throw InputError(log.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const std::runtime_error& e) {
            throw InputError(log.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!session) throw InputError("session log " + log.string() + " has no create event");
    return std::move(*session);
}

std::shared_ptr<SessionStore::Entry> SessionStore::entry(const std::string& session_id) {
    const auto path = log_path(session_id);
    std::shared_ptr<Entry> e;
    {
        std::lock_guard lock(entries_mutex_);
        auto& slot = entries_[session_id];
        if (!slot) slot = std::make_shared<Entry>();
        e = slot;
    }
    return e;
}

void SessionStore::append(const std::string& session_id, const json& event) {
    std::ofstream out(log_path(session_id), std::ios::app);
    if (!out) throw InputError("cannot append to session log for " + session_id);
    out << event.dump() << '\n';
    out.flush();
    if (!out) throw InputError("write failed for session log " + session_id);
}

bool SessionStore::exists(const std::string& session_id) {
    return std::filesystem::exists(log_path(session_id));
}

AnnotationSession SessionStore::create(SessionSpec spec) {
    validate_session_id(spec.session_id);
    auto e = entry(spec.session_id);
    std::lock_guard lock(e->mutex);
    if (e->session || std::filesystem::exists(log_path(spec.session_id)))
        throw ConfigError("session " + spec.session_id + " already exists");
    AnnotationSession session(spec);
    append(spec.session_id, {{"event", "create"}, {"at", now_iso()}, {"spec", spec_to_json(spec)}});
    e->session = session;
    return session;
}

namespace {

template <typename F>
AnnotationSession mutate(std::optional<AnnotationSession>& current, F&& f) {
    AnnotationSession next = *current;
    f(next);
    return next;
}

}  // namespace

AnnotationSession SessionStore::snapshot(const std::string& session_id) {
    auto e = entry(session_id);
    std::lock_guard lock(e->mutex);
    if (!e->session) {
        const auto path = log_path(session_id);
        if (!std::filesystem::exists(path)) throw ConfigError("no session " + session_id);
        e->session = replay(path);
    }
    return *e->session;
}

AnnotationSession SessionStore::submit_label(const std::string& session_id, const std::string& annotator,
                                             const std::string& tweet_id, const std::string& label) {
    snapshot(session_id);
    auto e = entry(session_id);
    std::lock_guard lock(e->mutex);
    auto next = mutate(e->session, [&](AnnotationSession& s) { s.submit_label(annotator, tweet_id, label); });
    append(session_id,
           {{"event", "label"}, {"at", now_iso()}, {"annotator", annotator}, {"tweet_id", tweet_id}, {"label", label}});
    e->session = next;
    return next;
}

std::vector<std::string> SessionStore::open_adjudication(const std::string& session_id) {
    snapshot(session_id);
    auto e = entry(session_id);
    std::lock_guard lock(e->mutex);
    std::vector<std::string> queue;
    const bool transition = e->session->status() == SessionStatus::labeling;
    auto next = mutate(e->session, [&](AnnotationSession& s) { queue = s.disagreement_queue(); });
    if (transition) append(session_id, {{"event", "open_adjudication"}, {"at", now_iso()}});
    e->session = next;
    return queue;
}

AnnotationSession SessionStore::adjudicate(const std::string& session_id, const std::string& tweet_id,
                                           const std::string& final_label) {
    snapshot(session_id);
    auto e = entry(session_id);
    std::lock_guard lock(e->mutex);
    auto next = mutate(e->session, [&](AnnotationSession& s) { s.adjudicate(tweet_id, final_label); });
    append(session_id, {{"event", "adjudicate"}, {"at", now_iso()}, {"tweet_id", tweet_id}, {"label", final_label}});
    e->session = next;
    return next;
}

}  // namespace tweetscope::annotate

#include "tweetscope/api.hpp"

#include <httplib.h>

#include "tweetscope/error.hpp"

namespace tweetscope::api {

using nlohmann::json;

namespace {

Response error(int status, const std::string& kind, const std::string& message) {
    return {status, {{"error", kind}, {"message", message}}};
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '/') {
            if (!cur.empty()) parts.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) parts.push_back(std::move(cur));
    return parts;
}

std::string required_string(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || !it->is_string()) throw ConfigError(std::string("body field '") + key + "' is required");
    return it->get<std::string>();
}

json progress_of(const annotate::AnnotationSession& s, const std::string& annotator) {
    return {{"labeled", s.labeled_count(annotator)}, {"total", s.item_count()}};
}

}  // namespace

Response AnnotationApi::handle(const std::string& method, const std::string& path,
                               const std::map<std::string, std::string>& query, const std::string& body) {
    const auto parts = split_path(path);
    if (parts.size() != 3 || parts[0] != "session") return error(404, "not_found", "no route for " + path);
    const std::string& id = parts[1];
    const std::string& action = parts[2];
    try {
        if (!store_.exists(id)) return error(404, "not_found", "no session " + id);
        json payload;
        if (method == "POST") {
            payload = json::parse(body.empty() ? "{}" : body);
            if (!payload.is_object()) return error(400, "bad_request", "body must be a JSON object");
        }
        if (method == "GET" && action == "next") return next_item(id, query);
        if (method == "POST" && action == "label") return label(id, payload);
        if (method == "GET" && action == "disagreements") return disagreements(id);
        if (method == "POST" && action == "adjudicate") return adjudicate(id, payload);
        if (method == "GET" && action == "kappa") return kappa(id);
        if (method == "GET" && action == "estimate") return estimate(id);
        return error(404, "not_found", "no route for " + method + " " + path);
    } catch (const json::exception& e) {
        return error(400, "bad_request", e.what());
    } catch (const ConfigError& e) {
        return error(400, "bad_request", e.what());
    } catch (const StateError& e) {
        return error(409, "conflict", e.what());
    } catch (const InputError& e) {
        return error(500, "storage", e.what());
    }
}

Response AnnotationApi::next_item(const std::string& id, const std::map<std::string, std::string>& query) {
    auto it = query.find("annotator");
    if (it == query.end()) throw ConfigError("query parameter 'annotator' is required");
    const auto s = store_.snapshot(id);
    const std::string& annotator = it->second;
    json body{{"session_id", id},
              {"annotator", annotator},
              {"phase", annotate::to_string(s.status())},
              {"labels", s.label_set().labels()},
              {"progress", progress_of(s, annotator)},
              {"item", nullptr}};
    if (s.status() == annotate::SessionStatus::labeling) {
        if (auto next = s.next_unlabeled(annotator))
            body["item"] = {{"tweet_id", *next}, {"cluster_id", s.cluster_of(*next)}, {"text", s.text_of(*next)}};
    }
    return {200, body};
}

Response AnnotationApi::label(const std::string& id, const json& body) {
    const auto annotator = required_string(body, "annotator");
    const auto s = store_.submit_label(id, annotator, required_string(body, "tweet_id"), required_string(body, "label"));
    return {200, {{"ok", true}, {"progress", progress_of(s, annotator)}}};
}

Response AnnotationApi::disagreements(const std::string& id) {
    store_.open_adjudication(id);
    const auto s = store_.snapshot(id);
    json items = json::array();
    for (const auto& d : s.pending_disagreements())
        items.push_back({{"tweet_id", d.tweet_id}, {"cluster_id", d.cluster}, {"text", d.text},
                         {"labels", d.candidate_labels}});
    return {200, {{"session_id", id}, {"phase", annotate::to_string(s.status())}, {"items", items}}};
}

Response AnnotationApi::adjudicate(const std::string& id, const json& body) {
    const auto s = store_.adjudicate(id, required_string(body, "tweet_id"), required_string(body, "label"));
    return {200, {{"ok", true}, {"phase", annotate::to_string(s.status())}, {"remaining", s.pending_disagreements().size()}}};
}

Response AnnotationApi::kappa(const std::string& id) {
    const auto s = store_.snapshot(id);
    // The confusion matrix exposes the other annotator's choices.
    if (s.status() == annotate::SessionStatus::labeling && !s.labeling_complete())
        throw StateError("agreement is available once labeling is complete");
    return {200, annotate::to_json(s.cohen_kappa())};
}

Response AnnotationApi::estimate(const std::string& id) {
    const auto s = store_.snapshot(id);
    auto body = annotate::to_json(s.weighted_category_estimate());
    body["labels"] = s.label_set().labels();
    return {200, body};
}

void mount(httplib::Server& server, AnnotationApi& api, const std::optional<std::filesystem::path>& static_dir) {
    auto route = [&api](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> query;
        for (const auto& [k, v] : req.params) query.emplace(k, v);
        const auto r = api.handle(req.method, req.path, query, req.body);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server.Get(R"(/session/.*)", route);
    server.Post(R"(/session/.*)", route);
    if (static_dir) server.set_mount_point("/", static_dir->string());
}

}  // namespace tweetscope::api

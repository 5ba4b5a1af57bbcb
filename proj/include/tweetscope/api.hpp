#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "tweetscope/annotate.hpp"

namespace httplib {
class Server;
}

namespace tweetscope::api {

struct Response {
    int status = 200;
    nlohmann::json body;
};

// JSON API over the session store, independent of the HTTP transport:
//   GET  /session/:id/next?annotator=A
//   POST /session/:id/label          {"annotator","tweet_id","label"}
//   GET  /session/:id/disagreements
//   POST /session/:id/adjudicate     {"tweet_id","label"}
//   GET  /session/:id/kappa
//   GET  /session/:id/estimate
// Responses never carry another annotator's labels while labeling, and
// disagreement payloads carry the two labels as a sorted, unattributed pair.
class AnnotationApi {
public:
    explicit AnnotationApi(annotate::SessionStore& store) : store_(store) {}

    Response handle(const std::string& method, const std::string& path,
                    const std::map<std::string, std::string>& query, const std::string& body);

private:
    Response next_item(const std::string& id, const std::map<std::string, std::string>& query);
    Response label(const std::string& id, const nlohmann::json& body);
    Response disagreements(const std::string& id);
    Response adjudicate(const std::string& id, const nlohmann::json& body);
    Response kappa(const std::string& id);
    Response estimate(const std::string& id);

    annotate::SessionStore& store_;
};

// Routes every /session/... request to `api`; serves `static_dir` at / when given.
void mount(httplib::Server& server, AnnotationApi& api, const std::optional<std::filesystem::path>& static_dir);

}  // namespace tweetscope::api

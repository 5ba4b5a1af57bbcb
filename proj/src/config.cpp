#include "tweetscope/config.hpp"

#include <set>
#include <sstream>

#include "toml.hpp"
#include "tweetscope/error.hpp"
#include "tweetscope/util.hpp"

namespace tweetscope::config {

using nlohmann::json;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"paths", {"archive", "hashtags", "stopwords", "cases_ministry", "cases_fallback", "output_dir"}},
        {"window", {"start", "end"}},
        {"ingest", {"lang", "kinds"}},
        {"normalize",
         {"strip_urls", "strip_mentions", "strip_emoji", "strip_punctuation", "strip_digits", "char_map",
          "collapse_whitespace"}},
        {"corpus", {"min_doc_freq", "max_doc_fraction"}},
        {"lda", {"num_topics", "alpha0", "beta", "iterations", "optimize_interval", "burn_in", "seed"}},
        {"cluster", {"candidate_ks", "k", "batch_size", "max_iters", "n_init", "seed", "per_cluster_n"}},
        {"annotate", {"session_id", "annotators", "labels"}},
        {"serve", {"bind", "port", "session_store", "static_dir"}},
    };
    return keys;
}

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw ConfigError("config " + where + ": " + what);
}

template <typename T>
std::optional<T> get(const toml::table& section, const std::string& sec, const char* key) {
    const toml::node* node = section.get(key);
    if (!node) return std::nullopt;
    if constexpr (std::is_same_v<T, bool>) {
        if (auto v = node->value_exact<bool>()) return *v;
        bad(sec + "." + key, "expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (auto v = node->value_exact<std::string>()) return *v;
        bad(sec + "." + key, "expected a string");
    } else if constexpr (std::is_floating_point_v<T>) {
        if (auto v = node->value<double>()) return *v;
        bad(sec + "." + key, "expected a number");
    } else {
        auto v = node->value_exact<std::int64_t>();
        if (!v || *v < 0) bad(sec + "." + key, "expected a non-negative integer");
        return static_cast<T>(*v);
    }
}

std::vector<std::string> get_strings(const toml::table& section, const std::string& sec, const char* key,
                                     std::vector<std::string> fallback) {
    const toml::node* node = section.get(key);
    if (!node) return fallback;
    const toml::array* arr = node->as_array();
    if (!arr) bad(sec + "." + key, "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& item : *arr) {
        auto s = item.value_exact<std::string>();
        if (!s) bad(sec + "." + key, "expected an array of strings");
        out.push_back(*s);
    }
    return out;
}

char32_t parse_codepoint(const toml::node& node, const std::string& where) {
    if (auto i = node.value_exact<std::int64_t>()) {
        if (*i < 0 || *i > 0x10FFFF) bad(where, "codepoint out of range");
        return static_cast<char32_t>(*i);
    }
    if (auto s = node.value_exact<std::string>()) {
        std::string t = *s;
        if (t.rfind("U+", 0) == 0 || t.rfind("u+", 0) == 0) t = t.substr(2);
        try {
            std::size_t used = 0;
            const unsigned long v = std::stoul(t, &used, 16);
            if (used == t.size() && v <= 0x10FFFF) return static_cast<char32_t>(v);
        } catch (const std::exception&) {
        }
    }
    bad(where, "expected a codepoint as integer or \"U+XXXX\"");
}

std::optional<Date> get_date(const toml::table& section, const std::string& sec, const char* key) {
    const toml::node* node = section.get(key);
    if (!node) return std::nullopt;
    if (auto d = node->value_exact<toml::date>()) {
        std::ostringstream ss;
        ss << *d;
        return parse_iso_date(ss.str());
    }
    if (auto s = node->value_exact<std::string>()) {
        if (auto d = parse_iso_date(*s)) return d;
    }
    bad(sec + "." + key, "expected a YYYY-MM-DD date");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

void apply_override(toml::table& root, const std::string& override_text) {
    const auto eq = override_text.find('=');
    const auto dot = override_text.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw ConfigError("override '" + override_text + "' must look like section.key=value");
    const std::string section = override_text.substr(0, dot);
    const std::string key = override_text.substr(dot + 1, eq - dot - 1);
    const std::string value = override_text.substr(eq + 1);
    toml::table parsed;
    try {
        parsed = toml::parse("v = " + value);
    } catch (const toml::parse_error&) {
        parsed = toml::table{{"v", value}};
    }
    if (!root.contains(section)) root.insert(section, toml::table{});
    toml::table* sec = root.get_as<toml::table>(section);
    if (!sec) throw ConfigError("override section '" + section + "' is not a table");
    sec->insert_or_assign(key, *parsed.get("v"));
}

}  // namespace

PipelineConfig parse(std::string_view toml_text, const std::filesystem::path& base_dir,
                     const std::vector<std::string>& overrides) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream ss;
        ss << e.description() << " at line " << e.source().begin.line;
        throw ConfigError("config: " + ss.str());
    }
    for (const auto& o : overrides) apply_override(root, o);

    for (const auto& [key, node] : root) {
        const std::string name(key.str());
        auto known = known_keys().find(name);
        if (known == known_keys().end()) bad(name, "unknown section");
        const toml::table* t = node.as_table();
        if (!t) bad(name, "expected a table");
        for (const auto& [k, _] : *t)
            if (!known->second.contains(std::string(k.str()))) bad(name + "." + std::string(k.str()), "unknown key");
    }
    auto section = [&](const char* name) -> const toml::table& {
        static const toml::table empty;
        const toml::table* t = root.get_as<toml::table>(name);
        return t ? *t : empty;
    };

    PipelineConfig c;
    const auto& paths = section("paths");
    auto path_of = [&](const char* key) -> std::optional<std::filesystem::path> {
        auto s = get<std::string>(paths, "paths", key);
        if (!s) return std::nullopt;
        return resolve(base_dir, *s);
    };
    c.paths.archive = path_of("archive").value_or("");
    c.paths.hashtags = path_of("hashtags").value_or("");
    c.paths.stopwords = path_of("stopwords").value_or("");
    c.paths.cases_ministry = path_of("cases_ministry").value_or("");
    c.paths.cases_fallback = path_of("cases_fallback");
    c.paths.output_dir = path_of("output_dir").value_or(resolve(base_dir, "out"));

    const auto& window = section("window");
    c.window_start = get_date(window, "window", "start");
    c.window_end = get_date(window, "window", "end");
    if (c.window_start && c.window_end && *c.window_start > *c.window_end) bad("window", "start is after end");

    const auto& ing = section("ingest");
    c.lang = get<std::string>(ing, "ingest", "lang").value_or("fa");
    if (ing.contains("kinds")) {
        c.kinds.clear();
        for (const auto& k : get_strings(ing, "ingest", "kinds", {})) {
            auto kind = ingest::parse_kind(k);
            if (!kind) bad("ingest.kinds", "unknown kind '" + k + "'");
            c.kinds.push_back(*kind);
        }
        if (c.kinds.empty()) bad("ingest.kinds", "must not be empty");
    }

    const auto& norm = section("normalize");
    auto& n = c.normalize;
    n.strip_urls = get<bool>(norm, "normalize", "strip_urls").value_or(n.strip_urls);
    n.strip_mentions = get<bool>(norm, "normalize", "strip_mentions").value_or(n.strip_mentions);
    n.strip_emoji = get<bool>(norm, "normalize", "strip_emoji").value_or(n.strip_emoji);
    n.strip_punctuation = get<bool>(norm, "normalize", "strip_punctuation").value_or(n.strip_punctuation);
    n.collapse_whitespace = get<bool>(norm, "normalize", "collapse_whitespace").value_or(n.collapse_whitespace);
    if (auto digits = get<std::string>(norm, "normalize", "strip_digits")) {
        if (*digits == "ascii_only") n.strip_digits = textnorm::DigitPolicy::ascii_only;
        else if (*digits == "all_scripts") n.strip_digits = textnorm::DigitPolicy::all_scripts;
        else if (*digits == "none") n.strip_digits = textnorm::DigitPolicy::none;
        else bad("normalize.strip_digits", "expected ascii_only, all_scripts or none");
    }
    if (const toml::node* cm = norm.get("char_map")) {
        const toml::array* arr = cm->as_array();
        if (!arr) bad("normalize.char_map", "expected an array of [from, to] pairs");
        n.char_map.clear();
        for (const auto& item : *arr) {
            const toml::array* pair = item.as_array();
            if (!pair || pair->size() != 2) bad("normalize.char_map", "expected [from, to] pairs");
            textnorm::CharMapping m;
            m.from = parse_codepoint(*pair->get(0), "normalize.char_map");
            const auto to = pair->get(1)->value_exact<std::string>();
            if (!(to && to->empty())) m.to = parse_codepoint(*pair->get(1), "normalize.char_map");
            n.char_map.push_back(m);
        }
    }
    n.validate();

    const auto& corpus = section("corpus");
    c.corpus.min_doc_freq = get<std::uint32_t>(corpus, "corpus", "min_doc_freq").value_or(1);
    c.corpus.max_doc_fraction = get<double>(corpus, "corpus", "max_doc_fraction").value_or(1.0);

    const auto& lda = section("lda");
    c.lda.num_topics = get<std::uint32_t>(lda, "lda", "num_topics").value_or(c.lda.num_topics);
    c.lda.alpha0 = get<double>(lda, "lda", "alpha0");
    c.lda.beta = get<double>(lda, "lda", "beta").value_or(c.lda.beta);
    c.lda.iterations = get<std::uint32_t>(lda, "lda", "iterations").value_or(c.lda.iterations);
    c.lda.optimize_interval = get<std::uint32_t>(lda, "lda", "optimize_interval").value_or(c.lda.optimize_interval);
    c.lda.burn_in = get<std::uint32_t>(lda, "lda", "burn_in").value_or(c.lda.burn_in);
    c.lda.seed = get<std::uint64_t>(lda, "lda", "seed").value_or(c.lda.seed);
    c.lda.validate();

    const auto& cl = section("cluster");
    if (const toml::node* ks = cl.get("candidate_ks")) {
        const toml::array* arr = ks->as_array();
        if (!arr) bad("cluster.candidate_ks", "expected an array of integers");
        for (const auto& item : *arr) {
            auto v = item.value_exact<std::int64_t>();
            if (!v || *v < 1) bad("cluster.candidate_ks", "expected positive integers");
            c.cluster.candidate_ks.push_back(static_cast<std::uint32_t>(*v));
        }
    } else {
        for (std::uint32_t k = 2; k <= 16; ++k) c.cluster.candidate_ks.push_back(k);
    }
    c.cluster.k = get<std::uint32_t>(cl, "cluster", "k");
    c.cluster.batch_size = get<std::size_t>(cl, "cluster", "batch_size").value_or(c.cluster.batch_size);
    c.cluster.max_iters = get<std::uint32_t>(cl, "cluster", "max_iters").value_or(c.cluster.max_iters);
    c.cluster.n_init = get<std::uint32_t>(cl, "cluster", "n_init").value_or(c.cluster.n_init);
    c.cluster.seed = get<std::uint64_t>(cl, "cluster", "seed").value_or(c.cluster.seed);
    c.cluster.per_cluster_n = get<std::size_t>(cl, "cluster", "per_cluster_n").value_or(c.cluster.per_cluster_n);

    const auto& an = section("annotate");
    c.annotate.session_id = get<std::string>(an, "annotate", "session_id").value_or(c.annotate.session_id);
    c.annotate.annotators = get_strings(an, "annotate", "annotators", c.annotate.annotators);
    if (an.contains("labels")) c.annotate.label_set = annotate::LabelSet(get_strings(an, "annotate", "labels", {}));

    const auto& sv = section("serve");
    c.service.bind = get<std::string>(sv, "serve", "bind").value_or(c.service.bind);
    c.service.port = static_cast<int>(get<std::uint32_t>(sv, "serve", "port").value_or(8080));
    if (auto s = get<std::string>(sv, "serve", "session_store")) c.service.session_store = resolve(base_dir, *s);
    if (auto s = get<std::string>(sv, "serve", "static_dir")) c.service.static_dir = resolve(base_dir, *s);
    return c;
}

PipelineConfig load(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides) {
    if (!file) return parse("", std::filesystem::current_path(), overrides);
    const auto text = read_file(*file);
    const auto base = std::filesystem::absolute(*file).parent_path();
    return parse(text, base, overrides);
}

json PipelineConfig::to_json() const {
    auto opt_path = [](const std::optional<std::filesystem::path>& p) { return p ? json(p->string()) : json(nullptr); };
    auto opt_date = [](const std::optional<Date>& d) { return d ? json(format_date(*d)) : json(nullptr); };
    json kinds_j = json::array();
    for (auto k : kinds) kinds_j.push_back(ingest::to_string(k));
    json char_map = json::array();
    for (const auto& m : normalize.char_map)
        char_map.push_back({static_cast<std::uint32_t>(m.from), m.to ? json(static_cast<std::uint32_t>(*m.to)) : json(nullptr)});
    const char* digits = normalize.strip_digits == textnorm::DigitPolicy::ascii_only    ? "ascii_only"
                         : normalize.strip_digits == textnorm::DigitPolicy::all_scripts ? "all_scripts"
                                                                                        : "none";
    // Output locations and service settings do not change artifact content,
    // so they stay out of the hash.
    return {{"paths",
             {{"archive", paths.archive.string()},
              {"hashtags", paths.hashtags.string()},
              {"stopwords", paths.stopwords.string()},
              {"cases_ministry", paths.cases_ministry.string()},
              {"cases_fallback", opt_path(paths.cases_fallback)}}},
            {"window", {{"start", opt_date(window_start)}, {"end", opt_date(window_end)}}},
            {"ingest", {{"lang", lang}, {"kinds", kinds_j}}},
            {"normalize",
             {{"strip_urls", normalize.strip_urls},
              {"strip_mentions", normalize.strip_mentions},
              {"strip_emoji", normalize.strip_emoji},
              {"strip_punctuation", normalize.strip_punctuation},
              {"strip_digits", digits},
              {"char_map", char_map},
              {"collapse_whitespace", normalize.collapse_whitespace}}},
            {"corpus", {{"min_doc_freq", corpus.min_doc_freq}, {"max_doc_fraction", corpus.max_doc_fraction}}},
            {"lda",
             {{"num_topics", lda.num_topics},
              {"alpha0", lda.initial_alpha()},
              {"beta", lda.beta},
              {"iterations", lda.iterations},
              {"optimize_interval", lda.optimize_interval},
              {"burn_in", lda.burn_in},
              {"seed", lda.seed}}},
            {"cluster",
             {{"candidate_ks", cluster.candidate_ks},
              {"k", cluster.k ? json(*cluster.k) : json(nullptr)},
              {"batch_size", cluster.batch_size},
              {"max_iters", cluster.max_iters},
              {"n_init", cluster.n_init},
              {"seed", cluster.seed},
              {"per_cluster_n", cluster.per_cluster_n}}},
            {"annotate",
             {{"session_id", annotate.session_id},
              {"annotators", annotate.annotators},
              {"labels", annotate.label_set.labels()}}}};
}

std::string PipelineConfig::hash() const { return sha256_hex(to_json().dump()); }

}  // namespace tweetscope::config

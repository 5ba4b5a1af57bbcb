#include "tweetscope/cli.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>

#include "tweetscope/api.hpp"
#include "tweetscope/cluster.hpp"
#include "tweetscope/config.hpp"
#include "tweetscope/error.hpp"
#include "tweetscope/timeseries.hpp"
#include "tweetscope/util.hpp"

namespace tweetscope::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string output_dir;
    // per-command
    std::uint32_t topics = 0;
    std::uint32_t iterations = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t top = 0;
    std::size_t bottom = 0;
    bool overlap = false;
    std::uint32_t k = 0;
    std::size_t per_cluster = 0;
    std::string session;
    std::string bind;
    int port = 0;
    std::string file;
};

class Context {
public:
    Context(config::PipelineConfig cfg, std::string command, std::ostream& out)
        : cfg_(std::move(cfg)), command_(std::move(command)), hash_(cfg_.hash()), out_(out) {}

    const config::PipelineConfig& cfg() const { return cfg_; }
    std::ostream& out() { return out_; }
    fs::path path(const fs::path& rel) const { return cfg_.paths.output_dir / rel; }

    // Writes the artifact and a sidecar recording the config hash that produced it.
    void write(const fs::path& rel, const std::string& contents) {
        const auto p = path(rel);
        write_file_atomic(p, contents);
        json meta{{"artifact", rel.generic_string()},
                  {"command", command_},
                  {"config_hash", hash_},
                  {"tool", std::string("tweetscope ") + kVersion}};
        auto meta_path = p;
        meta_path += ".meta.json";
        write_file_atomic(meta_path, meta.dump(2) + "\n");
        out_ << "wrote " << p.string() << '\n';
    }

    fs::path require_input(const fs::path& p, const char* what) const {
        if (p.empty()) throw ConfigError(std::string(what) + " path is not configured");
        if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
        return p;
    }

    fs::path require_artifact(const fs::path& rel, const char* producer) const {
        const auto p = path(rel);
        if (!fs::exists(p))
            throw ConfigError(p.string() + " is missing; run `tweetscope " + producer + "` first");
        return p;
    }

private:
    config::PipelineConfig cfg_;
    std::string command_;
    std::string hash_;
    std::ostream& out_;
};

std::string lda_model_name(std::uint32_t k) { return "lda/model_k" + std::to_string(k) + ".json"; }

// ---- subcommands ----

void cmd_ingest(Context& ctx) {
    const auto& cfg = ctx.cfg();
    std::ifstream archive(ctx.require_input(cfg.paths.archive, "archive"));
    std::ifstream tags_in(ctx.require_input(cfg.paths.hashtags, "hashtag list"));
    auto parsed = ingest::parse_tweet_stream(archive);
    auto deduped = ingest::dedupe(std::move(parsed.records));

    ingest::FilterSpec spec;
    spec.hashtags = ingest::read_hashtag_list(tags_in);
    spec.lang = cfg.lang;
    spec.kinds = {std::begin(ingest::kAllKinds), std::end(ingest::kAllKinds)};
    spec.first_day = cfg.window_start;
    spec.last_day = cfg.window_end;
    const auto retained = ingest::filter_corpus(deduped.records, spec);
    spec.kinds = {cfg.kinds.begin(), cfg.kinds.end()};
    const auto corpus = ingest::filter_corpus(retained, spec);

    auto manifest = ingest::build_manifest(retained, deduped.dropped, parsed.errors.size(), corpus.size());
    auto manifest_json = ingest::to_json(manifest);
    manifest_json["archive_records"] = deduped.records.size() + deduped.dropped;

    std::ostringstream all, kept, errors;
    ingest::write_records(all, retained);
    ingest::write_records(kept, corpus);
    for (const auto& e : parsed.errors) errors << json{{"line", e.line}, {"message", e.message}}.dump() << '\n';
    ctx.write("tweets.ndjson", all.str());
    ctx.write("corpus.ndjson", kept.str());
    ctx.write("ingest_errors.jsonl", errors.str());
    ctx.write("manifest.json", manifest_json.dump(2) + "\n");
}

void cmd_preprocess(Context& ctx) {
    const auto& cfg = ctx.cfg();
    const auto records = ingest::read_records(ctx.require_artifact("corpus.ndjson", "ingest"));
    const auto stopwords = cfg.paths.stopwords.empty()
                               ? textnorm::StopwordList{}
                               : textnorm::StopwordList::load_file(ctx.require_input(cfg.paths.stopwords, "stopword file"),
                                                                   cfg.normalize);
    std::vector<textnorm::TokenizedDoc> docs;
    docs.reserve(records.size());
    std::size_t empty = 0, tokens = 0;
    std::set<std::string> vocab;
    for (const auto& r : records) {
        docs.push_back(textnorm::preprocess(r.id, r.text, cfg.normalize, stopwords));
        empty += docs.back().tokens.empty();
        tokens += docs.back().tokens.size();
        vocab.insert(docs.back().tokens.begin(), docs.back().tokens.end());
    }
    std::ostringstream ss;
    textnorm::write_docs(ss, docs);
    ctx.write("docs.ndjson", ss.str());
    json summary{{"documents", docs.size()},
                 {"empty_documents", empty},
                 {"tokens", tokens},
                 {"unique_tokens", vocab.size()},
                 {"stopwords", stopwords.size()}};
    ctx.write("preprocess.json", summary.dump(2) + "\n");
}

void cmd_lda_train(Context& ctx) {
    const auto& cfg = ctx.cfg();
    const auto docs = textnorm::read_docs(ctx.require_artifact("docs.ndjson", "preprocess"));
    auto build = lda::build_corpus(docs, cfg.corpus.min_doc_freq, cfg.corpus.max_doc_fraction);
    const auto model = lda::gibbs_train(build.dictionary, build.corpus, cfg.lda);
    model.check_invariants();
    const auto K = cfg.lda.num_topics;
    ctx.write(lda_model_name(K), model.to_json().dump() + "\n");
    json summary{{"num_topics", K},
                 {"documents", build.corpus.docs.size()},
                 {"vocabulary", build.dictionary.size()},
                 {"tokens", build.corpus.total_tokens},
                 {"excluded_documents", build.excluded_ids.size()},
                 {"iterations_run", model.iterations_run()},
                 {"alpha", model.alpha()}};
    ctx.write("lda/train_k" + std::to_string(K) + ".json", summary.dump(2) + "\n");
}

void cmd_lda_report(Context& ctx, const Options& opt) {
    const auto K = ctx.cfg().lda.num_topics;
    const auto model = lda::LdaModel::load(ctx.require_artifact(lda_model_name(K), "lda-train"));
    if (opt.top && opt.bottom) throw ConfigError("choose one of --top and --bottom");
    const bool bottom = opt.bottom > 0;
    const std::size_t count = bottom ? opt.bottom : (opt.top ? opt.top : 25);
    const auto report = lda::topic_prevalence_report(
        model, bottom ? lda::ReportOrder::ascending : lda::ReportOrder::descending, count);
    std::ostringstream ss;
    lda::write_report_csv(ss, report);
    const std::string suffix = "_k" + std::to_string(K) + ".csv";
    ctx.write("lda/report_" + std::string(bottom ? "bottom" : "top") + std::to_string(count) + suffix, ss.str());

    std::ostringstream dom;
    dom << "tweet_id,dominant_topic\n";
    for (std::size_t d = 0; d < model.num_docs(); ++d) dom << model.doc_ids()[d] << ',' << model.dominant_topic(d) << '\n';
    ctx.write("lda/dominant" + suffix, dom.str());

    if (opt.overlap) {
        std::ostringstream ov;
        ov << "topic_a,topic_b,jaccard\n";
        for (const auto& o : lda::topic_overlap(model))
            if (o.jaccard > 0.0) ov << o.a << ',' << o.b << ',' << format_double(o.jaccard) << '\n';
        ctx.write("lda/overlap" + suffix, ov.str());
    }
}

struct ClusterInputs {
    std::vector<textnorm::TokenizedDoc> docs;
    cluster::TfIdfResult tfidf;
};

void cmd_cluster(Context& ctx) {
    const auto& cfg = ctx.cfg();
    const auto docs = textnorm::read_docs(ctx.require_artifact("docs.ndjson", "preprocess"));
    const auto tfidf = cluster::tfidf_fit_transform(docs);
    cluster::KMeansParams params;
    params.batch_size = cfg.cluster.batch_size;
    params.max_iters = cfg.cluster.max_iters;
    params.n_init = cfg.cluster.n_init;
    params.seed = cfg.cluster.seed;

    if (cfg.cluster.k) {
        params.k = *cfg.cluster.k;
    } else {
        std::vector<std::uint32_t> ks;
        for (auto k : cfg.cluster.candidate_ks)
            if (k <= tfidf.matrix.num_rows()) ks.push_back(k);
        const auto curve = cluster::elbow_select(tfidf.matrix, ks, params);
        for (const auto& w : curve.warnings) std::cerr << "warning: elbow: " << w << '\n';
        std::ostringstream ss;
        cluster::write_elbow_csv(ss, curve);
        ctx.write("cluster/elbow.csv", ss.str());
        params.k = curve.chosen_k;
    }
    params.seed = mix_seed(cfg.cluster.seed, params.k);
    const auto model = cluster::minibatch_kmeans(tfidf.matrix, params);

    std::vector<std::string> ids;
    ids.reserve(docs.size());
    for (const auto& d : docs) ids.push_back(d.tweet_id);
    std::ostringstream assign;
    cluster::write_assignments_csv(assign, ids, model.labels);
    ctx.write("cluster/assignments.csv", assign.str());
    auto model_json = cluster::to_json(model, tfidf.model, ids);
    model_json["zero_rows"] = tfidf.zero_rows.size();
    ctx.write("cluster/model.json", model_json.dump() + "\n");
}

json load_json(const fs::path& p) {
    try {
        return json::parse(read_file(p));
    } catch (const json::exception& e) {
        throw InputError(p.string() + ": " + e.what());
    }
}

void cmd_sample(Context& ctx) {
    const auto& cfg = ctx.cfg();
    const auto model = load_json(ctx.require_artifact("cluster/model.json", "cluster"));
    const auto ids = model.at("tweet_ids").get<std::vector<std::string>>();
    const auto labels = model.at("labels").get<std::vector<std::uint32_t>>();
    const auto ratios = model.at("cluster_ratios").get<std::vector<double>>();
    const auto sample = cluster::stratified_sample(labels, cfg.cluster.per_cluster_n, cfg.cluster.seed);

    std::map<std::string, std::string> all_texts;
    for (const auto& r : ingest::read_records(ctx.require_artifact("corpus.ndjson", "ingest")))
        all_texts.emplace(r.id, r.text);

    annotate::SessionSpec spec;
    spec.session_id = cfg.annotate.session_id;
    spec.annotators = cfg.annotate.annotators;
    spec.label_set = cfg.annotate.label_set;
    json sample_json = json::object();
    for (const auto& [cluster_id, rows] : sample) {
        auto& list = spec.sample[cluster_id];
        for (auto row : rows) {
            list.push_back(ids.at(row));
            spec.texts[ids.at(row)] = all_texts.count(ids.at(row)) ? all_texts.at(ids.at(row)) : std::string{};
        }
        sample_json[std::to_string(cluster_id)] = list;
    }
    for (std::uint32_t c = 0; c < ratios.size(); ++c) spec.cluster_ratios[c] = ratios[c];
    ctx.write("cluster/sample.json", sample_json.dump(2) + "\n");

    annotate::SessionStore store(cfg.session_store());
    if (store.exists(spec.session_id)) {
        const auto existing = store.snapshot(spec.session_id);
        if (existing.spec().sample != spec.sample || existing.spec().annotators != spec.annotators)
            throw ConfigError("session " + spec.session_id + " already exists with a different sample");
        ctx.out() << "session " << spec.session_id << " already exists\n";
        return;
    }
    const auto session = store.create(std::move(spec));
    ctx.out() << "created session " << session.id() << " with " << session.item_count() << " items\n";
}

annotate::AnnotationSession load_session(Context& ctx, const std::string& session_id) {
    annotate::SessionStore store(ctx.cfg().session_store());
    if (!store.exists(session_id)) throw ConfigError("no session " + session_id + "; run `tweetscope sample` first");
    return store.snapshot(session_id);
}

void cmd_kappa(Context& ctx, const std::string& session_id) {
    const auto session = load_session(ctx, session_id);
    const auto k = session.cohen_kappa();
    ctx.write("annotate/kappa.json", annotate::to_json(k).dump(2) + "\n");
    ctx.out() << "kappa " << (k.kappa ? format_double(*k.kappa) : std::string("undefined")) << " over " << k.n_items
              << " items\n";
}

void cmd_estimate(Context& ctx, const std::string& session_id) {
    const auto session = load_session(ctx, session_id);
    const auto estimate = session.weighted_category_estimate();
    std::ostringstream csv, labels;
    annotate::write_estimate_csv(csv, estimate, session.label_set());
    session.write_labels_csv(labels);
    ctx.write("annotate/estimate.csv", csv.str());
    ctx.write("annotate/estimate.json", annotate::to_json(estimate).dump(2) + "\n");
    ctx.write("annotate/labels.csv", labels.str());
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& p, std::size_t columns) {
    std::ifstream in(p);
    if (!in) throw InputError("cannot open " + p.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
        if (fields.size() != columns)
            throw InputError(p.string() + ": expected " + std::to_string(columns) + " columns: " + line);
        rows.push_back(std::move(fields));
    }
    return rows;
}

// CSV with header annotator,tweet_id,label
void cmd_label_import(Context& ctx, const std::string& session_id, const fs::path& file) {
    annotate::SessionStore store(ctx.cfg().session_store());
    std::size_t n = 0;
    for (const auto& row : read_csv_rows(file, 3)) {
        store.submit_label(session_id, row[0], row[1], row[2]);
        ++n;
    }
    ctx.out() << "recorded " << n << " labels\n";
}

// CSV with header tweet_id,label
void cmd_adjudicate_import(Context& ctx, const std::string& session_id, const fs::path& file) {
    annotate::SessionStore store(ctx.cfg().session_store());
    store.open_adjudication(session_id);
    std::size_t n = 0;
    for (const auto& row : read_csv_rows(file, 2)) {
        store.adjudicate(session_id, row[0], row[1]);
        ++n;
    }
    const auto s = store.snapshot(session_id);
    ctx.out() << "adjudicated " << n << " items; session is " << annotate::to_string(s.status()) << '\n';
}

void cmd_timeseries(Context& ctx) {
    const auto& cfg = ctx.cfg();
    const auto tweets = ingest::read_records(ctx.require_artifact("tweets.ndjson", "ingest"));
    const auto tweet_series = timeseries::bucket_daily(tweets);
    std::optional<timeseries::DailySeries> cases;
    if (!cfg.paths.cases_ministry.empty()) {
        std::optional<fs::path> fallback;
        if (cfg.paths.cases_fallback) fallback = ctx.require_input(*cfg.paths.cases_fallback, "fallback case CSV");
        auto loaded = ingest::load_case_counts(ctx.require_input(cfg.paths.cases_ministry, "ministry case CSV"), fallback);
        for (const auto& e : loaded.errors) std::cerr << "warning: line " << e.line << ": " << e.message << '\n';
        cases = timeseries::case_series(loaded.rows);
    }
    std::vector<const timeseries::DailySeries*> all{&tweet_series};
    if (cases) all.push_back(&*cases);
    std::ostringstream csv;
    timeseries::write_tidy_csv(csv, all);
    ctx.write("timeseries/series.csv", csv.str());

    json reports = json::array();
    if (cases && !cases->empty() && !tweet_series.empty()) {
        const timeseries::DateWindow window{cfg.window_start, cfg.window_end};
        for (auto kind : ingest::kAllKinds)
            for (const char* c : {"confirmed", "deaths", "recovered"}) {
                try {
                    auto pair = timeseries::align(tweet_series, std::string(ingest::to_string(kind)), *cases, c, window);
                    reports.push_back(timeseries::to_json(timeseries::pearson(pair)));
                } catch (const ConfigError& e) {
                    reports.push_back({{"series_a", ingest::to_string(kind)}, {"series_b", c}, {"error", e.what()}});
                }
            }
    }
    ctx.write("timeseries/correlation.json", reports.dump(2) + "\n");
}

void cmd_serve(Context& ctx, const Options& opt) {
    const auto& cfg = ctx.cfg();
    annotate::SessionStore store(cfg.session_store());
    api::AnnotationApi handler(store);
    httplib::Server server;
    api::mount(server, handler, cfg.service.static_dir);
    const std::string bind = opt.bind.empty() ? cfg.service.bind : opt.bind;
    const int port = opt.port ? opt.port : cfg.service.port;
    ctx.out() << "serving sessions from " << cfg.session_store().string() << " on " << bind << ':' << port << std::endl;
    if (!server.listen(bind, port)) throw ConfigError("cannot listen on " + bind + ":" + std::to_string(port));
}

int report_error(std::ostream& err, const char* kind, const std::string& message, int code) {
    err << json{{"error", kind}, {"message", message}}.dump() << '\n';
    return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"tweetscope: Persian tweet topic analysis pipeline", "tweetscope"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;
    app.add_option("-c,--config", opt.config_file, "TOML config file")->check(CLI::ExistingFile);
    app.add_option("--set", opt.overrides, "Override a config value: section.key=value");
    app.add_option("-o,--out", opt.output_dir, "Output directory (overrides paths.output_dir)");

    auto* ingest_cmd = app.add_subcommand("ingest", "Archive -> filtered corpus + manifest");
    auto* preprocess_cmd = app.add_subcommand("preprocess", "Corpus -> normalized token documents");
    auto* train_cmd = app.add_subcommand("lda-train", "Train an LDA model by collapsed Gibbs sampling");
    train_cmd->add_option("--topics", opt.topics, "Number of topics K");
    train_cmd->add_option("--iterations", opt.iterations, "Gibbs iterations");
    train_cmd->add_option("--seed", opt.seed, "Sampler seed")->each([&](const std::string&) { opt.seed_set = true; });
    auto* report_cmd = app.add_subcommand("lda-report", "Topic prevalence report (top-N or bottom-N)");
    report_cmd->add_option("--topics", opt.topics, "Which model (K) to report on");
    report_cmd->add_option("--top", opt.top, "Most prevalent N topics");
    report_cmd->add_option("--bottom", opt.bottom, "Least prevalent N topics");
    report_cmd->add_flag("--overlap", opt.overlap, "Also write top-10-word Jaccard overlap between topics");
    auto* cluster_cmd = app.add_subcommand("cluster", "TF-IDF + elbow + mini-batch k-means");
    cluster_cmd->add_option("--k", opt.k, "Fixed cluster count (skips the elbow search)");
    auto* sample_cmd = app.add_subcommand("sample", "Stratified sample per cluster; opens an annotation session");
    sample_cmd->add_option("--per-cluster", opt.per_cluster, "Tweets per cluster");
    auto* serve_cmd = app.add_subcommand("serve", "Annotation HTTP API");
    serve_cmd->add_option("--bind", opt.bind, "Bind address");
    serve_cmd->add_option("--port", opt.port, "Port");
    auto* kappa_cmd = app.add_subcommand("kappa", "Cohen's kappa for a session");
    auto* estimate_cmd = app.add_subcommand("estimate", "Cluster-weighted category estimate for a closed session");
    auto* label_cmd = app.add_subcommand("label-import", "Record labels from CSV (annotator,tweet_id,label)");
    label_cmd->add_option("file", opt.file, "CSV file")->required()->check(CLI::ExistingFile);
    auto* adjudicate_cmd = app.add_subcommand("adjudicate-import", "Adjudicate disagreements from CSV (tweet_id,label)");
    adjudicate_cmd->add_option("file", opt.file, "CSV file")->required()->check(CLI::ExistingFile);
    auto* timeseries_cmd = app.add_subcommand("timeseries", "Daily volume by kind, case counts, correlations");
    for (auto* cmd : {sample_cmd, kappa_cmd, estimate_cmd, label_cmd, adjudicate_cmd})
        cmd->add_option("--session", opt.session, "Session id (defaults to annotate.session_id)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        auto overrides = opt.overrides;
        if (!opt.output_dir.empty())
            overrides.push_back("paths.output_dir=\"" + fs::absolute(opt.output_dir).generic_string() + "\"");
        if (opt.topics) overrides.push_back("lda.num_topics=" + std::to_string(opt.topics));
        if (opt.iterations) overrides.push_back("lda.iterations=" + std::to_string(opt.iterations));
        if (opt.seed_set) overrides.push_back("lda.seed=" + std::to_string(opt.seed));
        if (opt.k) overrides.push_back("cluster.k=" + std::to_string(opt.k));
        if (opt.per_cluster) overrides.push_back("cluster.per_cluster_n=" + std::to_string(opt.per_cluster));
        if (!opt.session.empty()) overrides.push_back("annotate.session_id=\"" + opt.session + "\"");
        std::optional<fs::path> file;
        if (!opt.config_file.empty()) file = opt.config_file;
        auto cfg = config::load(file, overrides);
        const auto session_id = cfg.annotate.session_id;

        auto* sub = app.get_subcommands().front();
        Context ctx(std::move(cfg), sub->get_name(), out);
        if (sub == ingest_cmd) cmd_ingest(ctx);
        else if (sub == preprocess_cmd) cmd_preprocess(ctx);
        else if (sub == train_cmd) cmd_lda_train(ctx);
        else if (sub == report_cmd) cmd_lda_report(ctx, opt);
        else if (sub == cluster_cmd) cmd_cluster(ctx);
        else if (sub == sample_cmd) cmd_sample(ctx);
        else if (sub == serve_cmd) cmd_serve(ctx, opt);
        else if (sub == kappa_cmd) cmd_kappa(ctx, session_id);
        else if (sub == estimate_cmd) cmd_estimate(ctx, session_id);
        else if (sub == label_cmd) cmd_label_import(ctx, session_id, opt.file);
        else if (sub == adjudicate_cmd) cmd_adjudicate_import(ctx, session_id, opt.file);
        else if (sub == timeseries_cmd) cmd_timeseries(ctx);
        return 0;
    } catch (const ConfigError& e) {
        return report_error(err, "config", e.what(), 2);
    } catch (const InputError& e) {
        return report_error(err, "input", e.what(), 3);
    } catch (const StateError& e) {
        return report_error(err, "state", e.what(), 4);
    } catch (const std::exception& e) {
        return report_error(err, "internal", e.what(), 1);
    }
}

}  // namespace tweetscope::cli

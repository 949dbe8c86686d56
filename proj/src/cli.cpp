#include "u2f/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "u2f/dataset.hpp"
#include "u2f/eval.hpp"
#include "u2f/http.hpp"
#include "u2f/mock_provider.hpp"
#include "u2f/replay.hpp"
#include "u2f/robustness.hpp"
#include "u2f/service.hpp"
#include "u2f/text.hpp"

namespace fs = std::filesystem;

namespace u2f {

namespace {

/// Run-config keys settable from the environment, flags and config files.
const std::vector<std::pair<std::string, std::string>> kEnvKeys{
    {"mode", "U2F_MODE"},
    {"max_resets", "U2F_MAX_RESETS"},
    {"max_deepens", "U2F_MAX_DEEPENS"},
    {"search_enabled", "U2F_SEARCH_ENABLED"},
    {"max_candidates", "U2F_MAX_CANDIDATES"},
    {"max_repairs", "U2F_MAX_REPAIRS"},
};

struct Common {
    std::string config_file;
    std::string mock;
    std::string mode;
    std::string variant;
    int max_resets = -1;
    int max_deepens = -1;
    bool no_search = false;
};

struct Resolved {
    RunConfig config;
    Json provider = Json::object();
    /// key -> "flag" | "file" | "env" | "default"
    std::map<std::string, std::string> source;
};

Json env_value(const std::string& key, const char* raw) {
    const std::string v = raw;
    if (key == "mode") return v;
    if (key == "search_enabled") return text::to_lower(v) == "1" || text::to_lower(v) == "true";
    try {
        return std::stoi(v);
    } catch (const std::logic_error&) {
        fail(ErrorCode::Usage, "environment value for " + key + " is not an integer: " + v);
    }
}

/// flags > config file > environment > defaults.
Resolved resolve_config(const Common& c, std::ostream& err) {
    Resolved r;
    Json merged = Json(RunConfig{});
    for (const auto& [k, v] : merged.items()) r.source[k] = "default";
    for (const auto& [key, env] : kEnvKeys) {
        if (const char* raw = std::getenv(env.c_str())) {
            merged[key] = env_value(key, raw);
            r.source[key] = "env";
        }
    }
    if (!c.config_file.empty()) {
        std::ifstream in(c.config_file);
        if (!in) fail(ErrorCode::Usage, "cannot open config file " + c.config_file);
        const auto j = Json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.is_object()) fail(ErrorCode::Usage, "config file is not a JSON object");
        for (const auto& [k, v] : j.items()) {
            if (k == "provider") {
                r.provider = v;
                continue;
            }
            merged[k] = v;
            r.source[k] = "file";
        }
    }
    auto flag = [&](const std::string& k, Json v) {
        merged[k] = std::move(v);
        r.source[k] = "flag";
    };
    if (!c.mode.empty()) {
        const auto m = parse_mode(c.mode);
        if (!m) fail(ErrorCode::Usage, "unknown mode " + c.mode);
        flag("mode", to_string(*m));
    }
    if (c.max_resets >= 0) flag("max_resets", c.max_resets);
    if (c.max_deepens >= 0) flag("max_deepens", c.max_deepens);
    if (c.no_search) flag("search_enabled", false);
    if (!c.mock.empty()) {
        flag("chat_provider", "mock");
        flag("search_provider", "fixture");
    } else if (r.source["chat_provider"] == "default") {
        merged["chat_provider"] = "openai-compatible";
        merged["search_provider"] = "google-cse";
    }
    try {
        r.config = merged.get<RunConfig>();
    } catch (const Json::exception& e) {
        fail(ErrorCode::Usage, std::string("bad configuration: ") + e.what());
    }
    if (!c.variant.empty()) {
        const auto v = parse_ablation_variant(c.variant);
        if (!v) fail(ErrorCode::Usage, "unknown variant " + c.variant);
        r.config = ablation_config(*v, r.config);
        r.source["variant"] = "flag";
    }

    err << "config (precedence: flags > file > env > defaults):";
    const Json shown = Json(r.config);
    for (const char* k : {"mode", "variant", "max_resets", "max_deepens", "search_enabled", "chat_provider",
                          "search_provider", "max_candidates", "max_repairs"}) {
        err << " " << k << "=" << (shown.at(k).is_string() ? shown.at(k).get<std::string>() : shown.at(k).dump())
            << "(" << r.source[k] << ")";
    }
    err << "\n";
    return r;
}

RunServices make_services(const Common& c, const Resolved& r) {
    RunServices s;
    if (!c.mock.empty()) {
        if (!fs::exists(c.mock)) fail(ErrorCode::Usage, "mock path does not exist: " + c.mock);
        s.chat = ScriptedMockProvider::from_path(c.mock);
        const auto search_file = fs::is_directory(c.mock) ? fs::path(c.mock) / "search.jsonl"
                                                          : fs::path(c.mock).parent_path() / "search.jsonl";
        s.search = fs::exists(search_file) ? std::static_pointer_cast<SearchProvider>(
                                                 FixtureSearchProvider::from_file(search_file.string()))
                                           : std::make_shared<FixtureSearchProvider>();
        return s;
    }
    ProviderConfig pc;
    pc.apply_environment();
    if (!r.provider.empty()) pc.apply_json(r.provider);
    s.chat = std::make_shared<OpenAiChatProvider>(pc);
    try {
        s.search = GoogleSearchProvider::from_environment();
    } catch (const Error&) {
        s.search = nullptr;  // searches take the no-evidence path
    }
    s.gateway.deadline = pc.deadline;
    return s;
}

/// A single JSON object, a JSON array, or JSON-Lines.
std::vector<EnablerStory> load_stories(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto whole = Json::parse(buf.str(), nullptr, false);
    if (!whole.is_discarded()) {
        if (whole.is_object()) return {validate_enabler_story(whole)};
        if (whole.is_array()) {
            std::vector<EnablerStory> out;
            for (const auto& j : whole) out.push_back(validate_enabler_story(j));
            return out;
        }
    }
    return read_story_file(path);
}

std::vector<CaseResult> load_results(const std::string& dir) {
    std::vector<CaseResult> out;
    const auto all = fs::path(dir) / "results.jsonl";
    if (fs::exists(all)) {
        std::ifstream in(all);
        std::string line;
        while (std::getline(in, line)) {
            if (!text::trim(line).empty()) out.push_back(Json::parse(line).get<CaseResult>());
        }
        return out;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().string().ends_with(".result.json")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        out.push_back(Json::parse(in).get<CaseResult>());
    }
    if (out.empty()) fail(ErrorCode::IoError, "no results found in " + dir);
    return out;
}

void write_text(const std::string& path, const std::string& content) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream f(path);
    if (!f) fail(ErrorCode::IoError, "cannot write " + path);
    f << content;
}

void add_common(CLI::App* app, Common& c, bool with_mode) {
    app->add_option("--config", c.config_file, "JSON config file (run-config keys plus an optional provider object)");
    app->add_option("--mock", c.mock, "Directory of mock scripts (*.jsonl) plus search.jsonl; no network is used");
    if (with_mode) app->add_option("--mode", c.mode, "u2f | zeroshot | rolebased | seap");
    app->add_option("--max-resets", c.max_resets, "Strategic reset cap");
    app->add_option("--max-deepens", c.max_deepens, "Deeper-exploration cap");
    app->add_flag("--no-search", c.no_search, "Disable the search augmentor");
}

void print_batch(std::ostream& out, const BatchSummary& s, const std::string& dir) {
    out << s.results.size() << " cases, " << s.failed << " failed; results in " << dir << "\n";
}

} // namespace

int dispatch(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"U2F: discover unknown unknowns in Enabler Stories", "u2f"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    Common common;

    // run
    std::string story_file, trace_out, result_out;
    bool interactive = false;
    auto* run = app.add_subcommand("run", "Run one Enabler Story through the pipeline or a baseline");
    run->add_option("story-file", story_file, "Story JSON (object or JSON-Lines; first story)")->required();
    add_common(run, common, true);
    run->add_option("--variant", common.variant, "Full | NoSearch | NoExploration | NoIntegration | DiscoveryOnly");
    run->add_flag("--interactive", interactive, "Prompt for directives at every sub-stage boundary");
    run->add_option("--trace", trace_out, "Write the JSON-Lines trace here");
    run->add_option("--out", result_out, "Write the CaseResult here instead of stdout");

    // batch
    std::string dataset, out_dir;
    int pool = 4;
    auto* batch = app.add_subcommand("batch", "Run every story of a dataset");
    batch->add_option("dataset", dataset, "Dataset (JSON-Lines)")->required();
    batch->add_option("--out", out_dir, "Output directory for traces and results")->required();
    batch->add_option("--pool", pool, "Concurrent cases");
    add_common(batch, common, true);
    batch->add_option("--variant", common.variant, "Ablation variant");

    // replay
    std::string trace_file;
    auto* rep = app.add_subcommand("replay", "Re-execute a trace with its recorded responses");
    rep->add_option("trace", trace_file, "Trace file (JSON-Lines)")->required();

    // eval
    std::string results_dir, ratings_file, csv_out, md_out, embedder_kind = "hash";
    int dimension = 384;
    auto* ev = app.add_subcommand("eval", "Aggregate results and ratings into the comparison table");
    ev->add_option("results-dir", results_dir, "Directory with results.jsonl or *.result.json")->required();
    ev->add_option("--ratings", ratings_file, "Ratings (CSV or JSON-Lines)")->required();
    ev->add_option("--embedder", embedder_kind, "hash | remote")->check(CLI::IsMember({"hash", "remote"}));
    ev->add_option("--dimension", dimension, "Embedding dimension of the remote model");
    ev->add_option("--csv", csv_out, "Write the table as CSV");
    ev->add_option("--md", md_out, "Write the table as Markdown");

    // dataset build
    std::string raw_file, dataset_out, models_list;
    std::size_t k = 400;
    auto* ds = app.add_subcommand("dataset", "Dataset construction");
    ds->require_subcommand(1);
    auto* build = ds->add_subcommand("build", "Extract, transcribe, score and intersect raw tasks");
    build->add_option("raw", raw_file, "Raw tasks (JSON-Lines)")->required();
    build->add_option("--k", k, "Top-k per model")->required()->check(CLI::PositiveNumber);
    build->add_option("--out", dataset_out, "Dataset output path")->required();
    build->add_option("--mock", common.mock, "Mock directory: one subdirectory of scripts per scorer model");
    build->add_option("--models", models_list, "Comma-separated scorer model ids (live mode)");
    build->add_option("--pool", pool, "Concurrent transcriptions");

    // degrade
    double ratio = 0.0;
    std::uint64_t seed = 0;
    std::string degrade_mode = "remove", degrade_out;
    auto* deg = app.add_subcommand("degrade", "Remove or redact a fraction of every story's sentences");
    deg->add_option("dataset", dataset, "Dataset (JSON-Lines)")->required();
    deg->add_option("--ratio", ratio, "0 or within [0.25, 0.60]")->required();
    deg->add_option("--seed", seed, "Permutation seed");
    deg->add_option("--mode", degrade_mode, "remove | obscure | mixed");
    deg->add_option("--out", degrade_out, "Output path (stdout when omitted)");

    // ablate
    std::string variant_name;
    auto* abl = app.add_subcommand("ablate", "Run a dataset under an ablation variant");
    abl->add_option("variant", variant_name, "Full | NoSearch | NoExploration | NoIntegration | DiscoveryOnly")
        ->required();
    abl->add_option("dataset", dataset, "Dataset (JSON-Lines)")->required();
    abl->add_option("--out", out_dir, "Output directory")->required();
    abl->add_option("--pool", pool, "Concurrent cases");
    add_common(abl, common, false);

    // robustness
    std::string ratios = "0,0.25,0.4,0.6";
    auto* rob = app.add_subcommand("robustness", "Failure rate and novelty retention under degradation tiers");
    rob->add_option("dataset", dataset, "Dataset (JSON-Lines)")->required();
    rob->add_option("--ratios", ratios, "Comma-separated tier ratios; must include 0");
    rob->add_option("--seed", seed, "Permutation seed");
    rob->add_option("--degrade-mode", degrade_mode, "remove | obscure | mixed");
    rob->add_option("--ratings", ratings_file, "Coherence/relevance ratings (run = tier label)");
    rob->add_option("--csv", csv_out, "Write the report as CSV");
    rob->add_option("--pool", pool, "Concurrent cases");
    add_common(rob, common, true);

    // serve
    int port = 8080;
    std::string host = "127.0.0.1", trace_dir;
    auto* srv = app.add_subcommand("serve", "Serve the orchestrator HTTP API for the steering console");
    srv->add_option("--port", port, "Port")->required();
    srv->add_option("--host", host, "Bind address");
    srv->add_option("--trace-dir", trace_dir, "Persist run traces here");
    add_common(srv, common, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::ostringstream help;
        app.exit(e, help, err);
        err << help.str();
        return 2;
    }

    try {
        if (*run) {
            const auto r = resolve_config(common, err);
            const auto services = make_services(common, r);
            const auto story = load_stories(story_file).at(0);
            RunOptions opts;
            if (!trace_out.empty()) opts.trace_path = trace_out;
            TerminalChannel terminal(in, err);
            if (interactive) opts.channel = &terminal;
            const auto outcome = run_case(story, r.config, services, opts);
            const auto body = Json(outcome.result).dump(2) + "\n";
            if (result_out.empty()) {
                out << body;
            } else {
                write_text(result_out, body);
            }
            err << "status " << to_string(outcome.result.status) << ", "
                << outcome.trace.events.size() << " events\n";
            return outcome.result.status == Phase::Done ? 0 : 1;
        }
        if (*batch || *abl) {
            auto c = common;
            if (*abl) c.variant = variant_name;
            const auto r = resolve_config(c, err);
            const auto services = make_services(c, r);
            const auto summary = run_batch(load_stories(dataset), r.config, services, out_dir, pool);
            print_batch(out, summary, out_dir);
            return 0;
        }
        if (*rep) {
            const auto trace = read_trace_file(trace_file);
            const auto result = replay(trace);
            const auto bytes = canonical_result(result);
            if (trace.result && canonical_result(trace.result->get<CaseResult>()) != bytes) {
                err << "replayed result differs from the recorded result\n";
                out << bytes << "\n";
                return 1;
            }
            out << bytes << "\n";
            err << "replay identical (" << trace.events.size() << " events)\n";
            return 0;
        }
        if (*ev) {
            const auto results = load_results(results_dir);
            const auto ratings = read_ratings(ratings_file);
            std::unique_ptr<EmbeddingProvider> embedder;
            if (embedder_kind == "remote") {
                ProviderConfig pc;
                pc.apply_environment();
                if (const char* m = std::getenv("U2F_EMBED_MODEL")) pc.model = m;
                embedder = std::make_unique<RemoteEmbedder>(pc, dimension);
            } else {
                embedder = std::make_unique<HashEmbedder>();
            }
            const auto table = evaluate_run(results, ratings, *embedder);
            if (!csv_out.empty()) write_text(csv_out, to_csv(table));
            if (!md_out.empty()) write_text(md_out, to_markdown(table));
            out << to_markdown(table);
            return 0;
        }
        if (*build) {
            const auto tasks = read_raw_tasks(raw_file);
            std::vector<ScorerModel> models;
            DatasetOptions opts;
            opts.k = k;
            opts.pool_size = pool;
            if (!common.mock.empty()) {
                std::vector<fs::path> dirs;
                for (const auto& e : fs::directory_iterator(common.mock)) {
                    if (e.is_directory()) dirs.push_back(e.path());
                }
                std::sort(dirs.begin(), dirs.end());
                for (const auto& d : dirs) {
                    models.push_back({d.filename().string(), ScriptedMockProvider::from_path(d.string())});
                }
                auto extractor = std::make_shared<ScriptedMockProvider>();
                extractor->load(common.mock);
                opts.extractor = extractor;
            } else {
                ProviderConfig pc;
                pc.apply_environment();
                std::istringstream ids(models_list);
                std::string id;
                while (std::getline(ids, id, ',')) {
                    auto cfg = pc;
                    cfg.model = text::trim(id);
                    models.push_back({cfg.model, std::make_shared<OpenAiChatProvider>(cfg)});
                }
                if (!models.empty()) opts.extractor = models.front().provider;
            }
            if (models.size() < 2) fail(ErrorCode::Usage, "dataset build needs at least two scorer models");
            const auto result = build_dataset(tasks, models, opts);
            write_dataset(dataset_out, result);
            out << result.stories.size() << " stories from " << tasks.size() << " tasks; " << result.provenance.at("rejected").size()
                << " rejections recorded in " << dataset_out << ".provenance.json\n";
            return 0;
        }
        if (*deg) {
            const auto mode = parse_degradation_mode(degrade_mode);
            if (!mode) fail(ErrorCode::Usage, "unknown degradation mode " + degrade_mode);
            DegradationSpec spec;
            try {
                spec = DegradationSpec::make(ratio, *mode, seed);
            } catch (const Error& e) {
                fail(ErrorCode::Usage, e.detail());
            }
            std::vector<EnablerStory> degraded;
            for (const auto& s : load_stories(dataset)) degraded.push_back(degrade_input(s, spec));
            if (degrade_out.empty()) {
                for (const auto& s : degraded) out << Json(s).dump() << "\n";
            } else {
                write_story_file(degrade_out, degraded);
            }
            return 0;
        }
        if (*rob) {
            const auto r = resolve_config(common, err);
            const auto services = make_services(common, r);
            const auto mode = parse_degradation_mode(degrade_mode);
            if (!mode) fail(ErrorCode::Usage, "unknown degradation mode " + degrade_mode);
            std::vector<DegradationSpec> tiers;
            std::istringstream parts(ratios);
            std::string part;
            while (std::getline(parts, part, ',')) {
                try {
                    tiers.push_back(DegradationSpec::make(std::stod(part), *mode, seed));
                } catch (const std::logic_error&) {
                    fail(ErrorCode::Usage, "bad ratio " + part);
                } catch (const Error& e) {
                    fail(ErrorCode::Usage, e.detail());
                }
            }
            HashEmbedder embedder;
            const auto report = run_robustness_suite(load_stories(dataset), tiers, r.config, services, embedder,
                                                     ratings_file.empty() ? std::vector<RatingRecord>{}
                                                                          : read_ratings(ratings_file),
                                                     pool);
            if (!csv_out.empty()) write_text(csv_out, to_csv(report));
            out << to_markdown(report);
            return 0;
        }
        if (*srv) {
            const auto r = resolve_config(common, err);
            ServiceOptions opts;
            opts.services = make_services(common, r);
            opts.default_config = r.config;
            if (!trace_dir.empty()) opts.trace_dir = trace_dir;
            HttpService service(std::move(opts));
            const int bound = service.bind(host, port);
            if (bound < 0) fail(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
            err << "listening on http://" << host << ":" << bound << "\n";
            service.listen();
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::Usage ? 2 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace u2f

#include <httplib.h>

#include "u2f/service.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <thread>

#include "u2f/eval.hpp"
#include "u2f/robustness.hpp"

namespace u2f {

namespace {

struct Judgment {
    std::string uu_id;
    bool approved = false;
    std::string note;
    std::string rater_id;
    long long order = 0;
};

struct RunEntry {
    std::string id;
    EnablerStory story;
    RunConfig config;
    std::unique_ptr<TraceRecorder> recorder;
    std::unique_ptr<QueueChannel> channel;
    std::thread thread;

    std::optional<CaseResult> result;
    std::string error;
    bool finished = false;
    std::vector<Judgment> judgments;

    // Guards the fields above the line and wakes event-stream readers.
    std::mutex mutex;
    std::condition_variable cv;
};

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, Json{{"error", message}});
}

std::optional<Json> parse_body(const httplib::Request& req, httplib::Response& res) {
    auto j = Json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        send_error(res, 400, "request body must be a JSON object");
        return std::nullopt;
    }
    return j;
}

std::string sse_frame(const TraceEvent& e) {
    return "id: " + std::to_string(e.seq) + "\nevent: " + to_string(e.kind) + "\ndata: " + Json(e).dump() + "\n\n";
}

/// Accepted UU ids from the most recent filter stage in the trace.
std::set<std::string> known_uus(const std::vector<TraceEvent>& events) {
    std::set<std::string> out;
    for (const auto& e : events) {
        if (e.kind != EventKind::StageEnd || e.payload.value("stage", std::string{}) != "filter_candidates") continue;
        out.clear();
        for (const auto& u : e.payload.at("output").value("uus", Json::array())) out.insert(u.at("id").get<std::string>());
    }
    return out;
}

} // namespace

struct HttpService::Impl {
    ServiceOptions options;
    httplib::Server server;
    std::thread listener;
    std::atomic<bool> stopping{false};

    std::mutex runs_mutex;
    std::map<std::string, std::shared_ptr<RunEntry>> runs;
    std::vector<std::string> order;
    long long next_id = 1;
    long long next_judgment = 1;

    explicit Impl(ServiceOptions o) : options(std::move(o)) { routes(); }

    std::shared_ptr<RunEntry> find(const std::string& id) {
        std::lock_guard lock(runs_mutex);
        auto it = runs.find(id);
        return it == runs.end() ? nullptr : it->second;
    }

    Json summary(RunEntry& e) {
        std::lock_guard lock(e.mutex);
        Json j{{"id", e.id},
               {"case_id", e.story.id},
               {"mode", to_string(e.config.mode)},
               {"variant", e.config.variant},
               {"last_seq", e.recorder->last_seq()}};
        if (e.finished) {
            j["status"] = e.result ? to_string(e.result->status) : std::string("Error");
            if (!e.error.empty()) j["error"] = e.error;
        } else if (auto w = e.channel->waiting_at()) {
            j["status"] = "Awaiting";
            j["waiting_at"] = *w;
        } else {
            j["status"] = "Running";
        }
        return j;
    }

    std::shared_ptr<RunEntry> launch(EnablerStory story, RunConfig config, std::set<std::string> await, Millis timeout) {
        auto e = std::make_shared<RunEntry>();
        {
            std::lock_guard lock(runs_mutex);
            e->id = "run-" + std::to_string(next_id++);
            runs[e->id] = e;
            order.push_back(e->id);
        }
        e->story = std::move(story);
        e->config = std::move(config);
        std::optional<std::string> sink;
        if (options.trace_dir) {
            std::filesystem::create_directories(*options.trace_dir);
            sink = (std::filesystem::path(*options.trace_dir) / (e->id + ".trace.jsonl")).string();
        }
        e->recorder = std::make_unique<TraceRecorder>(e->story.id, e->config, sink);
        e->channel = std::make_unique<QueueChannel>(std::move(await), timeout);
        RunEntry* raw = e.get();
        e->recorder->subscribe([raw](const TraceEvent&) { raw->cv.notify_all(); });
        e->thread = std::thread([this, raw] {
            RunOptions opts;
            opts.channel = raw->channel.get();
            opts.recorder = raw->recorder.get();
            std::optional<CaseResult> result;
            std::string error;
            try {
                result = run_case(raw->story, raw->config, options.services, opts).result;
            } catch (const std::exception& ex) {
                error = ex.what();
            }
            {
                std::lock_guard lock(raw->mutex);
                raw->result = std::move(result);
                raw->error = std::move(error);
                raw->finished = true;
            }
            raw->cv.notify_all();
        });
        return e;
    }

    void routes() {
        server.Post("/runs", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req, res);
            if (!body) return;
            try {
                if (!body->contains("story")) fail(ErrorCode::MissingField, "story");
                auto story = validate_enabler_story(body->at("story"));
                Json merged = Json(options.default_config);
                if (body->contains("config")) merged.update(body->at("config"));
                auto config = merged.get<RunConfig>();
                if (body->contains("variant")) {
                    const auto v = parse_ablation_variant(body->at("variant").get<std::string>());
                    if (!v) fail(ErrorCode::InvalidValue, "unknown variant " + body->at("variant").dump());
                    config = ablation_config(*v, config);
                }
                const auto await = body->value("await_boundaries", std::set<std::string>{});
                const Millis timeout(body->value("await_timeout_ms", options.await_timeout.count()));
                const auto e = launch(std::move(story), std::move(config), await, timeout);
                send_json(res, 201, summary(*e));
            } catch (const Error& err) {
                send_error(res, 400, err.what());
            } catch (const Json::exception& err) {
                send_error(res, 400, err.what());
            }
        });

        server.Get("/runs", [this](const httplib::Request&, httplib::Response& res) {
            std::vector<std::shared_ptr<RunEntry>> all;
            {
                std::lock_guard lock(runs_mutex);
                for (const auto& id : order) all.push_back(runs.at(id));
            }
            Json out = Json::array();
            for (const auto& e : all) out.push_back(summary(*e));
            send_json(res, 200, out);
        });

        server.Get(R"(/runs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto e = find(req.matches[1]);
            if (!e) return send_error(res, 404, "unknown run");
            auto j = summary(*e);
            std::lock_guard lock(e->mutex);
            if (e->result) j["result"] = *e->result;
            send_json(res, 200, j);
        });

        server.Get(R"(/runs/([^/]+)/trace)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto e = find(req.matches[1]);
            if (!e) return send_error(res, 404, "unknown run");
            send_json(res, 200, Json(e->recorder->snapshot()));
        });

        server.Get(R"(/runs/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto e = find(req.matches[1]);
            if (!e) return send_error(res, 404, "unknown run");
            long long cursor = 0;
            try {
                if (req.has_param("cursor")) cursor = std::stoll(req.get_param_value("cursor"));
                if (req.has_header("Last-Event-ID")) {
                    cursor = std::max(cursor, std::stoll(req.get_header_value("Last-Event-ID")));
                }
            } catch (const std::logic_error&) {
                return send_error(res, 400, "cursor must be an integer");
            }
            auto position = std::make_shared<long long>(cursor);
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider("text/event-stream", [this, e, position](std::size_t, httplib::DataSink& sink) {
                for (const auto& ev : e->recorder->events_since(*position)) {
                    const auto frame = sse_frame(ev);
                    if (!sink.write(frame.data(), frame.size())) return false;
                    *position = ev.seq;
                }
                std::unique_lock lock(e->mutex);
                if (e->finished && e->recorder->last_seq() <= *position) {
                    const std::string end = "event: end\ndata: {}\n\n";
                    sink.write(end.data(), end.size());
                    sink.done();
                    return true;
                }
                if (stopping) return false;
                e->cv.wait_for(lock, Millis(200));
                return true;
            });
        });

        server.Post(R"(/runs/([^/]+)/directive)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto e = find(req.matches[1]);
            if (!e) return send_error(res, 404, "unknown run");
            const auto body = parse_body(req, res);
            if (!body) return;
            HumanDirective d;
            try {
                d = body->get<HumanDirective>();
            } catch (const Error& err) {
                return send_error(res, 400, err.what());
            } catch (const Json::exception& err) {
                return send_error(res, 400, err.what());
            }
            {
                std::lock_guard lock(e->mutex);
                if (e->finished) {
                    return send_error(res, 409, std::string(to_string(ErrorCode::TerminalState)) + ": run already " +
                                                    (e->result ? to_string(e->result->status) : std::string("ended")));
                }
            }
            e->channel->push(d);
            send_json(res, 202, Json{{"accepted", true}, {"run_id", e->id}, {"directive", d}});
        });

        server.Post(R"(/runs/([^/]+)/release)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto e = find(req.matches[1]);
            if (!e) return send_error(res, 404, "unknown run");
            e->channel->release();
            send_json(res, 200, Json{{"released", true}});
        });

        server.Post(R"(/runs/([^/]+)/judgments)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto e = find(req.matches[1]);
            if (!e) return send_error(res, 404, "unknown run");
            const auto body = parse_body(req, res);
            if (!body) return;
            if (!body->contains("uu_id") || !body->contains("approved") || !body->at("approved").is_boolean()) {
                return send_error(res, 400, "judgment needs uu_id and a boolean approved");
            }
            Judgment j;
            j.uu_id = body->at("uu_id").get<std::string>();
            j.approved = body->at("approved").get<bool>();
            j.note = body->value("note", std::string{});
            j.rater_id = body->value("rater_id", std::string("console"));
            if (!known_uus(e->recorder->snapshot().events).count(j.uu_id)) {
                return send_error(res, 404, "unknown uu_id " + j.uu_id);
            }
            {
                std::lock_guard lock(runs_mutex);
                j.order = next_judgment++;
            }
            std::lock_guard lock(e->mutex);
            e->judgments.push_back(j);
            send_json(res, 201, Json{{"recorded", true}, {"order", j.order}});
        });

        server.Get(R"(/runs/([^/]+)/judgments)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto e = find(req.matches[1]);
            if (!e) return send_error(res, 404, "unknown run");
            std::lock_guard lock(e->mutex);
            Json history = Json::array();
            // Latest judgment per (rater, uu) wins; history keeps every one.
            std::map<std::pair<std::string, std::string>, const Judgment*> latest;
            for (const auto& j : e->judgments) {
                history.push_back({{"uu_id", j.uu_id}, {"approved", j.approved}, {"note", j.note},
                                   {"rater_id", j.rater_id}, {"order", j.order}});
                latest[{j.rater_id, j.uu_id}] = &j;
            }
            std::map<std::string, RatingRecord> per_rater;
            int approved = 0;
            for (const auto& [key, j] : latest) {
                auto& r = per_rater[key.first];
                r.case_id = e->story.id;
                r.rater_id = key.first;
                r.uu_approvals.push_back({j->uu_id, j->approved, j->note});
                approved += j->approved;
            }
            CaseResult label_of;
            label_of.mode = e->config.mode;
            label_of.variant = e->config.variant;
            Json fragments = Json::array();
            for (const auto& [rater, r] : per_rater) {
                Json f = Json(r);
                f.erase("novelty");
                f.erase("feasibility");
                f["run"] = run_label(label_of);
                fragments.push_back(f);
            }
            Json out{{"history", history}, {"ratings", fragments}};
            out["approval_rate"] = latest.empty() ? Json(nullptr)
                                                  : Json(static_cast<double>(approved) / static_cast<double>(latest.size()));
            send_json(res, 200, out);
        });
    }

    void shutdown() {
        stopping = true;
        server.stop();
        if (listener.joinable()) listener.join();
        std::vector<std::shared_ptr<RunEntry>> all;
        {
            std::lock_guard lock(runs_mutex);
            for (const auto& [id, e] : runs) all.push_back(e);
        }
        for (const auto& e : all) {
            e->channel->release();
            if (e->thread.joinable()) e->thread.join();
        }
    }
};

HttpService::HttpService(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

HttpService::~HttpService() { impl_->shutdown(); }

int HttpService::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    if (!impl_->server.bind_to_port(host, port)) fail(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpService::listen() { impl_->server.listen_after_bind(); }

int HttpService::start(const std::string& host, int port) {
    const int bound = bind(host, port);
    if (bound < 0) fail(ErrorCode::IoError, "cannot bind " + host);
    impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpService::stop() { impl_->shutdown(); }

bool HttpService::wait_for(const std::string& run_id, Millis timeout) {
    const auto e = impl_->find(run_id);
    if (!e) return false;
    std::unique_lock lock(e->mutex);
    return e->cv.wait_for(lock, timeout, [&] { return e->finished; });
}

} // namespace u2f

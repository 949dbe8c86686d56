#pragma once

#include <memory>
#include <optional>
#include <string>

#include "u2f/orchestrator.hpp"

namespace u2f {

struct ServiceOptions {
    RunServices services;
    RunConfig default_config;
    /// Where `<run-id>.trace.jsonl` files go; none when empty.
    std::optional<std::string> trace_dir;
    /// Longest a run waits at an awaited boundary.
    Millis await_timeout{60000};
};

/// The orchestrator HTTP API used by the steering console:
///
///     POST /runs                      {story, config?, await_boundaries?} -> 201 {id}
///     GET  /runs                      run summaries
///     GET  /runs/{id}                 summary plus result when finished
///     GET  /runs/{id}/trace           the RunTrace so far
///     GET  /runs/{id}/events          server-sent trace events; resumes after
///                                     ?cursor=<seq> or Last-Event-ID
///     POST /runs/{id}/directive       HumanDirective -> 202; 400 invalid,
///                                     409 finished run
///     POST /runs/{id}/release         ends any awaited boundary
///     POST /runs/{id}/judgments       {uu_id, approved, note?, rater_id?}
///     GET  /runs/{id}/judgments       history, latest verdicts, approval rate
///
/// Runs execute on their own threads; directives reach them at sub-stage
/// boundaries through the same channel protocol as the interactive CLI.
class HttpService {
public:
    explicit HttpService(ServiceOptions options);
    ~HttpService();
    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds (port 0 picks a free port) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void listen();
    /// bind + listen on a background thread; returns the port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    void stop();

    /// Blocks until the run finishes; false on timeout or unknown id.
    bool wait_for(const std::string& run_id, Millis timeout);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace u2f

#pragma once

#include <memory>
#include <string>

#include "maser/bench.hpp"
#include "maser/error.hpp"

namespace maser {

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8750;  // 0 picks a free port
    double autofire_min_hz = 0.5;
    double autofire_max_hz = 10.0;
};

/// HTTP status for a library error kind.
int http_status(ErrorKind kind) noexcept;

/// HTTP + server-sent-events front end over one BenchSession.
///
///   GET  /state                     session state
///   POST /tune      {height_mm | f_target_hz | step_hz}
///   GET  /s11?span_hz&points        fresh reflection sweep
///   POST /fire      {energy_mj?}
///   GET  /shots                     shot log in id order
///   GET  /shots/{id}                one record
///   GET  /shots/{id}/{trace|envelope|spectrum|metrics}
///   GET  /events                    text/event-stream: s11-updated, shot-completed
///   GET|POST /autofire {enabled, rate_hz}
class BenchService {
public:
    BenchService(BenchSession& session, ServiceOptions opts = {});
    ~BenchService();
    BenchService(const BenchService&) = delete;
    BenchService& operator=(const BenchService&) = delete;

    /// Binds and returns the port; call run() (blocking) or start() afterwards.
    int bind();
    void run();
    /// Runs the server on a background thread.
    void start();
    void stop();
    int port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace maser

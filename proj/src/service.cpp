#include "maser/service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <list>
#include <thread>

#include <httplib.h>

#include "maser/error.hpp"

namespace maser {

int http_status(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::NotFound:
            return 404;
        case ErrorKind::IoFailure:
            return 500;
        case ErrorKind::InvalidArgument:
        case ErrorKind::ParseError:
        case ErrorKind::HeightOutOfRange:
        case ErrorKind::FrequencyUnreachable:
        case ErrorKind::InvalidGrid:
            return 400;
        default:
            return is_numerical(kind) ? 422 : 400;
    }
}

namespace {

constexpr const char* kJson = "application/json";

struct Subscriber {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::string> queue;
    bool closed = false;
};

class EventHub {
public:
    std::shared_ptr<Subscriber> add() {
        auto s = std::make_shared<Subscriber>();
        std::lock_guard lock(mu_);
        subs_.push_back(s);
        return s;
    }

    void remove(const std::shared_ptr<Subscriber>& s) {
        std::lock_guard lock(mu_);
        subs_.remove(s);
    }

    void publish(const std::string& event, const Json& payload) {
        const std::string frame = "event: " + event + "\ndata: " + payload.dump() + "\n\n";
        std::lock_guard lock(mu_);
        for (auto& s : subs_) {
            std::lock_guard sl(s->mu);
            s->queue.push_back(frame);
            s->cv.notify_all();
        }
    }

    void close_all() {
        std::lock_guard lock(mu_);
        for (auto& s : subs_) {
            std::lock_guard sl(s->mu);
            s->closed = true;
            s->cv.notify_all();
        }
    }

private:
    std::mutex mu_;
    std::list<std::shared_ptr<Subscriber>> subs_;
};

void send_json(httplib::Response& res, const Json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& msg) {
    send_json(res, {{"error", kind}, {"message", msg}}, status);
}

Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    Json j = Json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorKind::ParseError, "request body must be a JSON object");
    return j;
}

double number_field(const Json& j, const char* key) {
    const Json& v = j.at(key);
    if (!v.is_number()) fail(ErrorKind::InvalidArgument, std::string(key) + " must be a number");
    return v.get<double>();
}

double query_number(const httplib::Request& req, const char* key) {
    const std::string s = req.get_param_value(key);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) fail(ErrorKind::InvalidArgument, std::string("bad query value for ") + key);
    return v;
}

}  // namespace

struct BenchService::Impl {
    BenchSession& session;
    ServiceOptions opts;
    httplib::Server server;
    EventHub hub;
    int listener = 0;
    int bound_port = -1;
    std::thread server_thread;
    std::atomic<bool> stopping{false};

    std::mutex auto_mu;
    std::condition_variable auto_cv;
    bool auto_enabled = false;
    double auto_rate_hz = 1.0;
    std::uint64_t auto_shots = 0;
    std::thread auto_thread;

    Impl(BenchSession& s, ServiceOptions o) : session(s), opts(std::move(o)) {
        listener = session.subscribe([this](const std::string& ev, const Json& payload) {
            hub.publish(ev, payload);
        });
        server.new_task_queue = [] { return new httplib::ThreadPool(16); };
        routes();
        auto_thread = std::thread([this] { autofire_loop(); });
    }

    ~Impl() { shutdown(); }

    void shutdown() {
        if (stopping.exchange(true)) return;
        {
            std::lock_guard lock(auto_mu);
            auto_enabled = false;
        }
        auto_cv.notify_all();
        if (auto_thread.joinable()) auto_thread.join();
        hub.close_all();
        server.stop();
        if (server_thread.joinable()) server_thread.join();
        session.unsubscribe(listener);
    }

    Json autofire_state() {
        std::lock_guard lock(auto_mu);
        return {{"enabled", auto_enabled}, {"rate_hz", auto_rate_hz}, {"shots_fired", auto_shots}};
    }

    void autofire_loop() {
        using clock = std::chrono::steady_clock;
        std::unique_lock lock(auto_mu);
        auto next = clock::now();
        while (!stopping) {
            if (!auto_enabled) {
                auto_cv.wait(lock, [this] { return stopping || auto_enabled; });
                next = clock::now() + std::chrono::duration_cast<clock::duration>(
                                          std::chrono::duration<double>(1.0 / auto_rate_hz));
                continue;
            }
            if (auto_cv.wait_until(lock, next, [this] { return stopping || !auto_enabled; })) continue;
            next += std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / auto_rate_hz));
            lock.unlock();
            try {
                session.fire();
                lock.lock();
                ++auto_shots;
            } catch (const std::exception& e) {
                std::cerr << "autofire: " << e.what() << '\n';
                lock.lock();
            }
            // a slow shot must not trigger a catch-up burst
            next = std::max(next, clock::now());
        }
    }

    template <class F>
    httplib::Server::Handler guarded(F fn) {
        return [fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const MaserError& e) {
                send_error(res, http_status(e.kind()), std::string(to_string(e.kind())), e.what());
            } catch (const Json::exception& e) {
                send_error(res, 400, "ParseError", e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "Internal", e.what());
            }
        };
    }

    void serve_file(httplib::Response& res, const fs::path& path, const char* mime) {
        if (!fs::exists(path)) fail(ErrorKind::NotFound, "no " + path.filename().string() + " for this shot");
        res.set_content(read_text_file(path), mime);
    }

    void routes() {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });

        server.Get("/state", guarded([this](const httplib::Request&, httplib::Response& res) {
            Json j = session.state();
            j["autofire"] = autofire_state();
            send_json(res, j);
        }));

        server.Post("/tune", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const Json body = parse_body(req);
            const int given = int(body.contains("height_mm")) + int(body.contains("f_target_hz")) +
                              int(body.contains("step_hz"));
            if (given != 1) {
                fail(ErrorKind::InvalidArgument, "give exactly one of height_mm, f_target_hz, step_hz");
            }
            ReflectionTrace tr;
            if (body.contains("height_mm")) {
                tr = session.tune_height(number_field(body, "height_mm"));
            } else if (body.contains("f_target_hz")) {
                tr = session.tune_frequency(number_field(body, "f_target_hz"));
            } else {
                tr = session.tune_step(number_field(body, "step_hz"));
            }
            send_json(res, {{"state", session.state()}, {"s11", s11_to_json(tr)}});
        }));

        server.Get("/s11", guarded([this](const httplib::Request& req, httplib::Response& res) {
            std::optional<double> span;
            std::optional<std::size_t> points;
            if (req.has_param("span_hz")) span = query_number(req, "span_hz");
            if (req.has_param("points")) {
                const double p = query_number(req, "points");
                if (!(p >= 3.0 && p <= 100000.0) || p != std::floor(p)) {
                    fail(ErrorKind::InvalidArgument, "points must be an integer in [3, 100000]");
                }
                points = static_cast<std::size_t>(p);
            }
            send_json(res, s11_to_json(session.s11(span, points)));
        }));

        server.Post("/fire", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const Json body = parse_body(req);
            std::optional<double> energy;
            if (body.contains("energy_mj") && !body.at("energy_mj").is_null()) {
                const double mj = number_field(body, "energy_mj");
                if (!(mj >= 0.0)) fail(ErrorKind::InvalidArgument, "energy_mj must be >= 0");
                energy = mj / 1e3;
            }
            send_json(res, to_json(session.fire(energy)));
        }));

        server.Get("/shots", guarded([this](const httplib::Request&, httplib::Response& res) {
            Json arr = Json::array();
            for (const auto& r : session.shots()) arr.push_back(to_json(r));
            send_json(res, arr);
        }));

        server.Get(R"(/shots/(\d+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, to_json(session.shot(std::stoull(req.matches[1]))));
        }));

        server.Get(R"(/shots/(\d+)/(trace|envelope|spectrum|metrics|peaks|config))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const fs::path dir = session.shot_dir(std::stoull(req.matches[1]));
                       const std::string what = req.matches[2];
                       if (what == "trace") {
                           serve_file(res, dir / shot_files::kTrace, "text/csv");
                       } else if (what == "envelope") {
                           serve_file(res, dir / shot_files::kEnvelope, "text/csv");
                       } else if (what == "spectrum") {
                           serve_file(res, dir / shot_files::kSpectrum, "text/csv");
                       } else if (what == "metrics") {
                           serve_file(res, dir / shot_files::kMetrics, kJson);
                       } else if (what == "peaks") {
                           serve_file(res, dir / shot_files::kPeaks, kJson);
                       } else {
                           serve_file(res, dir / shot_files::kConfig, kJson);
                       }
                   }));

        server.Get("/autofire", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, autofire_state());
        }));

        server.Post("/autofire", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const Json body = parse_body(req);
            {
                std::lock_guard lock(auto_mu);
                double rate = auto_rate_hz;
                bool enabled = auto_enabled;
                if (body.contains("rate_hz")) rate = number_field(body, "rate_hz");
                if (body.contains("enabled")) {
                    if (!body.at("enabled").is_boolean()) fail(ErrorKind::InvalidArgument, "enabled must be a boolean");
                    enabled = body.at("enabled").get<bool>();
                }
                if (!(rate >= opts.autofire_min_hz && rate <= opts.autofire_max_hz)) {
                    fail(ErrorKind::InvalidArgument, "rate_hz outside the supported range");
                }
                auto_rate_hz = rate;
                auto_enabled = enabled;
            }
            auto_cv.notify_all();
            send_json(res, autofire_state());
        }));

        server.Get("/events", [this](const httplib::Request&, httplib::Response& res) {
            auto sub = hub.add();
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider(
                "text/event-stream",
                [this, sub, first = true](std::size_t, httplib::DataSink& sink) mutable {
                    if (first) {
                        first = false;
                        const std::string hello = ": connected\n\n";
                        return sink.write(hello.data(), hello.size());
                    }
                    std::deque<std::string> batch;
                    {
                        std::unique_lock lock(sub->mu);
                        sub->cv.wait_for(lock, std::chrono::seconds(1),
                                         [&] { return sub->closed || !sub->queue.empty(); });
                        batch.swap(sub->queue);
                        if (sub->closed && batch.empty()) {
                            sink.done();
                            return true;
                        }
                    }
                    if (!sink.is_writable()) return false;
                    if (batch.empty()) batch.push_back(": keepalive\n\n");
                    for (const auto& frame : batch) {
                        if (!sink.write(frame.data(), frame.size())) return false;
                    }
                    return true;
                },
                [this, sub](bool) { hub.remove(sub); });
        });
    }
};

BenchService::BenchService(BenchSession& session, ServiceOptions opts)
    : impl_(std::make_unique<Impl>(session, std::move(opts))) {}

BenchService::~BenchService() = default;

int BenchService::bind() {
    if (impl_->bound_port >= 0) return impl_->bound_port;
    const ServiceOptions& o = impl_->opts;
    if (o.port == 0) {
        impl_->bound_port = impl_->server.bind_to_any_port(o.host);
    } else if (impl_->server.bind_to_port(o.host, o.port)) {
        impl_->bound_port = o.port;
    }
    if (impl_->bound_port < 0) {
        fail(ErrorKind::IoFailure, "cannot bind " + o.host + ":" + std::to_string(o.port));
    }
    return impl_->bound_port;
}

void BenchService::run() {
    bind();
    impl_->server.listen_after_bind();
}

void BenchService::start() {
    bind();
    impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void BenchService::stop() { impl_->shutdown(); }

int BenchService::port() const { return impl_->bound_port; }

}  // namespace maser

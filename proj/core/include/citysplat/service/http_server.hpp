#pragma once

#include "citysplat/service/render_service.hpp"

#include <memory>
#include <string>
#include <thread>

namespace citysplat::service {

struct BindAddress {
    std::string host = "127.0.0.1";
    int port = 8080;
};

/// Parses "--bind host[:port]". A missing port falls back to the
/// CITYSPLAT_PORT environment variable, then 8080. Port 0 asks the OS for a
/// free port. Throws ConfigError on malformed input.
BindAddress resolve_bind(const std::string& bind_flag);

/// Endpoints:
///   GET  /scene/info   scene metadata (JSON)
///   POST /render       image/png, stats in X-* headers
///   GET  /stats/last   stats of the last frame (JSON, 404 before any frame)
///   POST /lod          replace distance intervals (JSON ack)
///   GET  /blocks       block bounds for overlays (JSON)
/// Errors are JSON {"error", "field"} with status 400 or 413.
class HttpServer {
public:
    HttpServer(RenderService& service, BindAddress address);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and serves on a background thread; returns the bound port.
    int start();
    /// Binds and serves on the calling thread until stop().
    void run();
    void stop();
    int port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    BindAddress address_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace citysplat::service

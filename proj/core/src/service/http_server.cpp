#include "citysplat/service/http_server.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include <cstdlib>

namespace citysplat::service {

namespace {

int parse_port(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const int p = std::stoi(s, &used);
        if (used != s.size() || p < 0 || p > 65535) {
            throw ConfigError("");
        }
        return p;
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("invalid port '{}' in {}", s, what));
    }
}

void send_error(httplib::Response& res, int status, const std::string& field, const std::string& message) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", message}, {"field", field}}.dump(), "application/json");
}

} // namespace

BindAddress resolve_bind(const std::string& bind_flag) {
    BindAddress addr;
    bool have_port = false;
    if (!bind_flag.empty()) {
        const auto colon = bind_flag.rfind(':');
        if (colon == std::string::npos) {
            addr.host = bind_flag;
        } else {
            addr.host = bind_flag.substr(0, colon);
            addr.port = parse_port(bind_flag.substr(colon + 1), "--bind");
            have_port = true;
        }
        if (addr.host.empty()) {
            addr.host = "127.0.0.1";
        }
    }
    if (!have_port) {
        if (const char* env = std::getenv("CITYSPLAT_PORT"); env != nullptr && *env != '\0') {
            addr.port = parse_port(env, "CITYSPLAT_PORT");
        }
    }
    return addr;
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(RenderService& service, BindAddress address)
    : impl_(std::make_unique<Impl>()), address_(std::move(address)) {
    auto& srv = impl_->server;
    srv.set_payload_max_length(service.options().max_body_bytes);

    srv.Get("/scene/info", [&service](const httplib::Request&, httplib::Response& res) {
        res.set_content(service.scene_info_json(), "application/json");
    });
    srv.Get("/blocks", [&service](const httplib::Request&, httplib::Response& res) {
        res.set_content(service.blocks_json(), "application/json");
    });
    srv.Get("/stats/last", [&service](const httplib::Request&, httplib::Response& res) {
        if (auto s = service.last_stats_json()) {
            res.set_content(*s, "application/json");
        } else {
            send_error(res, 404, "", "no frame rendered yet");
        }
    });
    srv.Post("/render", [&service](const httplib::Request& req, httplib::Response& res) {
        try {
            const FrameResult frame = service.render_frame(req.body);
            const FrameStats& s = frame.stats;
            res.set_header("X-Render-Ms", fmt::format("{:.3f}", s.render_ms));
            res.set_header("X-Selection-Ms", fmt::format("{:.3f}", s.selection_ms));
            res.set_header("X-Visible-Gaussians", std::to_string(s.visible_gaussians));
            res.set_header("X-Fps-Estimate", fmt::format("{:.2f}", s.fps_estimate));
            res.set_header("X-Lod-Enabled", s.lod_enabled ? "true" : "false");
            std::string levels;
            for (const auto& b : s.blocks) {
                levels += fmt::format("{}{}:{}", levels.empty() ? "" : ",", b.id, b.level);
            }
            res.set_header("X-Block-Levels", levels);
            res.set_content(std::string(frame.png.begin(), frame.png.end()), "image/png");
        } catch (const RequestError& e) {
            send_error(res, e.status(), e.field(), e.what());
        } catch (const Error& e) {
            send_error(res, 400, "", e.what());
        }
    });
    srv.Post("/lod", [&service](const httplib::Request& req, httplib::Response& res) {
        try {
            res.set_content(service.update_lod_config(req.body), "application/json");
        } catch (const RequestError& e) {
            send_error(res, e.status(), e.field(), e.what());
        } catch (const Error& e) {
            send_error(res, 400, "intervals", e.what());
        }
    });
    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.status == 413 && res.body.empty()) {
            send_error(res, 413, "body", "request body too large");
        }
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start() {
    auto& srv = impl_->server;
    if (address_.port == 0) {
        port_ = srv.bind_to_any_port(address_.host);
    } else {
        port_ = srv.bind_to_port(address_.host, address_.port) ? address_.port : -1;
    }
    if (port_ < 0) {
        throw ConfigError(fmt::format("cannot bind {}:{}", address_.host, address_.port));
    }
    thread_ = std::thread([&srv] { srv.listen_after_bind(); });
    srv.wait_until_ready();
    return port_;
}

void HttpServer::run() {
    auto& srv = impl_->server;
    if (address_.port == 0) {
        port_ = srv.bind_to_any_port(address_.host);
    } else {
        port_ = srv.bind_to_port(address_.host, address_.port) ? address_.port : -1;
    }
    if (port_ < 0) {
        throw ConfigError(fmt::format("cannot bind {}:{}", address_.host, address_.port));
    }
    srv.listen_after_bind();
}

void HttpServer::stop() {
    if (impl_) {
        impl_->server.stop();
    }
    if (thread_.joinable()) {
        thread_.join();
    }
}

} // namespace citysplat::service

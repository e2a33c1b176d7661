#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "whatif/service.hpp"

namespace whatif {

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string content_type;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

/// Transport-independent router for the /api routes:
///   POST /api/session                      {"image": base64}  (or a raw image/* body)
///   GET  /api/session/{id}
///   POST /api/session/{id}/inpaint         {"mask": base64 PNG, "algorithm", "params"}
///   POST /api/session/{id}/undo
///   POST /api/session/{id}/reset
///   GET  /api/session/{id}/cam?class=N&mode=overlay|raw[&alpha=a]   -> image/png
///   GET  /api/labels
/// Errors are JSON {"error": kind, "detail": message} with the mapped status.
class Api {
  public:
    explicit Api(SessionService& service) : service_(service) {}
    ApiResponse handle(const ApiRequest& request);

  private:
    SessionService& service_;
};

/// Owns a cpp-httplib server bound to `host`. `port` 0 picks a free port.
class HttpServer {
  public:
    HttpServer(SessionService& service, std::filesystem::path static_dir = {});
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Returns the bound port. Throws Error(io) if binding fails.
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop() is called.
    void serve();
    void stop();
    /// Blocks until serve() has entered its accept loop.
    void wait_until_ready() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace whatif

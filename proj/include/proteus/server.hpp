#pragma once

// Network face of the query processor. ServiceEndpoint owns the protocol
// logic (XML in/out, fault mapping, status codes) without any socket so the
// CLI and the tests can drive the exact same path; HttpServer is the thin
// httplib wrapper around it.

#include <memory>
#include <string>
#include <vector>

#include "proteus/clock.hpp"
#include "proteus/plugins.hpp"
#include "proteus/queryproc.hpp"
#include "proteus/repository.hpp"
#include "proteus/usql_xml.hpp"

namespace proteus::server {

struct HttpReply {
    int status = 200;
    std::string content_type;
    std::string body;
    std::vector<std::string> warnings;  // lenient-parse warnings, if any
};

class ServiceEndpoint {
public:
    ServiceEndpoint(const repository::Repository& repository,
                    const plugins::Registry& registry, std::shared_ptr<const Clock> clock,
                    model::ParseMode mode = model::ParseMode::Lenient)
        : repository_(repository),
          processor_(repository, registry, std::move(clock)),
          mode_(mode) {}

    // POST /usql. 200 with a response document; 400 malformed XML; 422
    // schema violations and query faults (body is a fault document); 500
    // anything else. Never throws.
    HttpReply usql(const std::string& request_xml) const;

    // GET /health: liveness only.
    HttpReply health() const;

    // GET /stats: plain-text store counts, total and per broker/serviceType.
    HttpReply stats() const;

private:
    const repository::Repository& repository_;
    queryproc::QueryProcessor processor_;
    model::ParseMode mode_;
};

class HttpServer {
public:
    explicit HttpServer(ServiceEndpoint endpoint);
    ~HttpServer();  // stops and joins a background listener

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds host:port (port 0 picks a free one) and serves on a background
    // thread. Returns the bound port. Throws ConfigError when binding fails.
    int start(const std::string& host, int port);

    // Binds and serves on the calling thread until stop() is called from
    // elsewhere. Throws ConfigError when binding fails.
    void run(const std::string& host, int port);

    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace proteus::server

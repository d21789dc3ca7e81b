#include "proteus/server.hpp"

#include <httplib.h>

#include <chrono>
#include <map>
#include <sstream>
#include <thread>

#include "proteus/errors.hpp"

namespace proteus::server {

namespace {

constexpr const char* kXmlType = "application/xml";

// Faults the caller can fix by changing the request; everything else in the
// Error hierarchy is an engine-side problem and maps to 500.
bool is_request_fault(const Error& error) {
    return dynamic_cast<const SchemaError*>(&error) ||
           dynamic_cast<const EmptyRequirements*>(&error) ||
           dynamic_cast<const NonPositiveWeight*>(&error) ||
           dynamic_cast<const UnknownQoSName*>(&error) ||
           dynamic_cast<const UnknownFilterName*>(&error) ||
           dynamic_cast<const UnknownTarget*>(&error) ||
           dynamic_cast<const PluginNotFound*>(&error) ||
           dynamic_cast<const NotFound*>(&error);
}

}  // namespace

HttpReply ServiceEndpoint::usql(const std::string& request_xml) const {
    std::string request_id;
    std::vector<std::string> warnings;
    try {
        model::ParsedRequest parsed = model::parse_request(request_xml, mode_);
        request_id = parsed.request.request_id;
        warnings = std::move(parsed.warnings);
        model::USQLResponse response = processor_.execute(parsed.request);
        return {200, kXmlType, model::serialize_response(response), std::move(warnings)};
    } catch (const SyntaxError& e) {
        return {400, kXmlType, model::serialize_fault({request_id, e.code(), e.what()}),
                std::move(warnings)};
    } catch (const Error& e) {
        const int status = is_request_fault(e) ? 422 : 500;
        return {status, kXmlType, model::serialize_fault({request_id, e.code(), e.what()}),
                std::move(warnings)};
    } catch (const std::exception& e) {
        return {500, kXmlType,
                model::serialize_fault({request_id, "InternalError", e.what()}),
                std::move(warnings)};
    }
}

HttpReply ServiceEndpoint::health() const { return {200, "text/plain", "ok\n", {}}; }

HttpReply ServiceEndpoint::stats() const {
    const auto all = repository_.retrieve({}, {});
    std::map<std::string, std::size_t> per_broker;
    std::map<std::string, std::size_t> per_type;
    for (const auto& ad : all) {
        ++per_broker[ad.source_broker_id];
        ++per_type[std::string(model::to_string(ad.service_type))];
    }
    std::ostringstream out;
    out << "advertisements " << all.size() << "\n";
    for (const auto& [broker, count] : per_broker) {
        out << "broker " << broker << " " << count << "\n";
    }
    for (const auto& [type, count] : per_type) {
        out << "serviceType " << type << " " << count << "\n";
    }
    return {200, "text/plain", out.str(), {}};
}

struct HttpServer::Impl {
    ServiceEndpoint endpoint;
    httplib::Server server;
    std::thread listener;

    explicit Impl(ServiceEndpoint ep) : endpoint(std::move(ep)) {
        server.Post("/usql", [this](const httplib::Request& req, httplib::Response& res) {
            apply(endpoint.usql(req.body), res);
        });
        server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
            apply(endpoint.health(), res);
        });
        server.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
            apply(endpoint.stats(), res);
        });
    }

    static void apply(HttpReply reply, httplib::Response& res) {
        res.status = reply.status;
        for (const std::string& warning : reply.warnings) {
            res.set_header("X-USQL-Warning", warning);
        }
        res.set_content(std::move(reply.body), reply.content_type);
    }
};

HttpServer::HttpServer(ServiceEndpoint endpoint)
    : impl_(std::make_unique<Impl>(std::move(endpoint))) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
        if (bound <= 0) throw ConfigError("cannot bind a port on " + host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (!impl_->server.is_running()) {
        if (std::chrono::steady_clock::now() > deadline) {
            stop();
            throw ConfigError("server failed to start on " + host + ":" +
                              std::to_string(bound));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    return bound;
}

void HttpServer::run(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) {
        throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    }
}

void HttpServer::stop() {
    impl_->server.stop();
    if (impl_->listener.joinable()) impl_->listener.join();
}

}  // namespace proteus::server

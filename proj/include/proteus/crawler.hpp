#pragma once

// Broker crawling: Harvester plugins fetch raw service publications from
// configured brokers, Parser plugins normalize them into advertisements, and
// the Crawler drives the schedule and feeds the repository with full-sync
// batches (one batch per broker per crawl).

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "proteus/clock.hpp"
#include "proteus/model.hpp"
#include "proteus/plugins.hpp"
#include "proteus/repository.hpp"

namespace proteus::crawler {

// Schema namespaces of the built-in description formats; a publication's
// namespace selects the Parser plugin.
namespace schema_ns {
inline constexpr std::string_view wsdl_subset = "urn:proteus:schema:wsdl-subset";
inline constexpr std::string_view p2p_json = "urn:proteus:schema:p2p-json";
inline constexpr std::string_view grid_desc = "urn:proteus:schema:grid-desc";
}  // namespace schema_ns

// One raw service description as found in a broker.
struct ServicePublication {
    std::string source_broker_id;
    std::string document_id;
    std::string schema_namespace;  // non-empty; drives parser selection
    std::string content;           // raw document bytes
    // Broker-side context (classification, peerGroup, virtualOrganization)
    // merged into the advertisements' filter attributes.
    std::map<std::string, std::string> broker_attributes;
};

struct CrawlReport {
    std::string broker_id;
    std::int64_t started_at = 0;
    std::int64_t finished_at = 0;
    std::size_t publications_found = 0;
    std::size_t advertisements_stored = 0;
    // (documentId, error message) for every publication that failed to parse.
    std::vector<std::pair<std::string, std::string>> parse_failures;
    // Set when the crawl stored nothing at all: harvest failure, unknown
    // broker type, or a persistence failure. The broker's previous
    // repository state is left untouched in that case.
    std::optional<std::string> error;
};

// ---------------------------------------------------------------------------
// Plugin interfaces

class Harvester : public plugins::Plugin {
public:
    // Complete listing of the broker's current publications, in a
    // deterministic order. Throws BrokerUnreachable (transient; retried on
    // the next due tick) or AccessDenied (permanent; the broker is skipped).
    virtual std::vector<ServicePublication> harvest(const model::BrokerDescriptor& broker) = 0;
};

class Parser : public plugins::Plugin {
public:
    // One advertisement per service operation in the document. Throws
    // ParseError on a malformed document; the crawl records the failure and
    // carries on with the broker's remaining publications.
    virtual std::vector<model::ServiceAdvertisement> parse(
        const ServicePublication& publication) const = 0;
};

// ---------------------------------------------------------------------------
// Built-in harvesters

// Reads description files from a local folder ("path" access detail).
// Recognized extensions map to schema namespaces (.wsdl, .json, .grid);
// everything else is skipped. If the folder contains a `.token` file, the
// broker's "token" access detail must match its contents or the harvest
// fails with AccessDenied. A missing folder is BrokerUnreachable.
//
// The simulator broker types are pre-configured restrictions of this class:
// `sim-registry` (.wsdl only, propagates "classification"), `sim-p2p`
// (.json only, propagates "peerGroup"), `sim-grid` (.grid only, propagates
// "virtualOrganization"). The generic `dir` type accepts every known
// extension and propagates all three attributes when present.
class DirectoryHarvester final : public Harvester {
public:
    struct Options {
        std::vector<std::string> extensions;      // empty = every known extension
        std::vector<std::string> propagate_keys;  // accessDetails -> brokerAttributes
    };

    explicit DirectoryHarvester(Options options) : options_(std::move(options)) {}

    std::vector<ServicePublication> harvest(const model::BrokerDescriptor& broker) override;

private:
    Options options_;
};

// Fetches an index document from the "endpoint" access detail (plain http
// only) and then every publication it lists. Index lines are
// `documentId<TAB>schemaNamespace<TAB>path` with `#` comments; paths are
// resolved against the index URL's directory. When a "token" access detail
// is present it is sent as a bearer Authorization header. HTTP 401/403 map
// to AccessDenied; connection failures, other statuses, and a malformed
// index map to BrokerUnreachable.
class HttpIndexHarvester final : public Harvester {
public:
    std::vector<ServicePublication> harvest(const model::BrokerDescriptor& broker) override;
};

// ---------------------------------------------------------------------------
// Built-in parsers (document grammars are specified in docs/formats.md)

// WSDL subset: definitions / message / part, portType / operation with
// documentation and modelReference annotations, one service + port for the
// endpoint, and document-level qos elements. One advertisement per
// operation, serviceType WebService.
class WsdlSubsetParser final : public Parser {
public:
    std::vector<model::ServiceAdvertisement> parse(
        const ServicePublication& publication) const override;
};

// JSON peer descriptor: service/provider/pipe plus an operations array.
// One advertisement per operation, serviceType P2PService.
class P2PJsonParser final : public Parser {
public:
    std::vector<model::ServiceAdvertisement> parse(
        const ServicePublication& publication) const override;
};

// Grid service descriptor: gridService root with operation, input/output,
// resourceProperty and qos children. Every operation's advertisement carries
// the document's resource properties, serviceType GridService.
class GridDescParser final : public Parser {
public:
    std::vector<model::ServiceAdvertisement> parse(
        const ServicePublication& publication) const override;
};

// Registers the harvesters ("dir", "http-index", "sim-registry", "sim-p2p",
// "sim-grid") and the three parsers above, keyed by schema namespace.
void register_builtin_crawlers(plugins::Registry& registry);

// ---------------------------------------------------------------------------
// Crawl driver

// Harvests brokers and replaces their repository state batch-wise. Crawls
// of distinct brokers may run concurrently; crawls of one broker never do.
// All timestamps (report times, harvestedAt) come from the injected clock.
class Crawler {
public:
    Crawler(const plugins::Registry& registry, repository::Repository& repository,
            std::shared_ptr<const Clock> clock)
        : registry_(registry), repository_(repository), clock_(std::move(clock)) {}

    // Crawls one broker unconditionally (waits if a crawl is in flight).
    CrawlReport crawl_broker(const model::BrokerDescriptor& broker);

    // Crawls every broker once, in order; per-broker failures are isolated
    // and land in that broker's report.
    std::vector<CrawlReport> crawl_once(const std::vector<model::BrokerDescriptor>& brokers);

    // Crawls the brokers that are due: never crawled, or at least
    // crawlIntervalSeconds since their last crawl started. A broker whose
    // previous crawl is still running is deferred, never run concurrently.
    // Returns reports for the brokers actually crawled.
    std::vector<CrawlReport> tick(const std::vector<model::BrokerDescriptor>& brokers);

private:
    struct BrokerState {
        std::mutex busy;                        // held while a crawl runs
        std::optional<std::int64_t> last_start; // guarded by states_mutex_
    };

    std::shared_ptr<BrokerState> state_for(const std::string& broker_id);
    CrawlReport run_crawl(const model::BrokerDescriptor& broker, std::int64_t started_at);

    const plugins::Registry& registry_;
    repository::Repository& repository_;
    std::shared_ptr<const Clock> clock_;

    std::mutex states_mutex_;
    std::map<std::string, std::shared_ptr<BrokerState>> states_;
};

// ---------------------------------------------------------------------------
// Broker configuration

// Loads a broker configuration file: one broker per line,
//   id  brokerType  crawlIntervalSeconds  key=value...
// with `#` comments and blank lines ignored. A relative "path" value is
// resolved against the configuration file's directory. Throws ConfigError
// on malformed lines, a non-positive interval, or a duplicate id.
std::vector<model::BrokerDescriptor> load_broker_config(const std::string& path);

}  // namespace proteus::crawler

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>

#include <filesystem>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "proteus/brokersim.hpp"
#include "proteus/clock.hpp"
#include "proteus/crawler.hpp"
#include "proteus/errors.hpp"
#include "proteus/plugins.hpp"
#include "proteus/repository.hpp"
#include "proteus/server.hpp"
#include "proteus/usql_xml.hpp"

using namespace proteus;
namespace fs = std::filesystem;

namespace {

const std::string kDataDir = PROTEUS_DATA_DIR;

const plugins::Registry& shared_registry() {
    static plugins::Registry* registry = [] {
        auto* r = new plugins::Registry();
        auto taxonomy = std::make_shared<const plugins::OntologyTaxonomy>(
            plugins::OntologyTaxonomy::load_file(kDataDir + "/taxonomy.tsv"));
        plugins::register_builtin_matchers(*r, kDataDir, taxonomy);
        crawler::register_builtin_crawlers(*r);
        return r;
    }();
    return *registry;
}

// One small crawled corpus shared by every test: 1 query concept (7 docs)
// plus 2 ambient services. The repository never changes afterwards, so the
// fixed clock makes every response byte-deterministic.
struct Fixture {
    brokersim::SimCorpus corpus;
    repository::Repository repository;
    std::shared_ptr<FixedClock> clock = std::make_shared<FixedClock>(1723900000);

    Fixture() : corpus(brokersim::generate(make_spec(), corpus_dir())) {
        crawler::Crawler crawler(shared_registry(), repository, clock);
        auto brokers = crawler::load_broker_config((corpus.root / "brokers.conf").string());
        for (const auto& report : crawler.crawl_once(brokers)) {
            REQUIRE_FALSE(report.error.has_value());
        }
        REQUIRE(repository.size() == 9);
    }

    static brokersim::SimCorpusSpec make_spec() {
        brokersim::SimCorpusSpec spec;
        spec.query_count = 1;
        spec.ambient_count = 2;
        return spec;
    }

    static fs::path corpus_dir() {
        fs::path dir = fs::temp_directory_path() / "proteus-http" / "corpus";
        fs::remove_all(dir);
        return dir;
    }

    server::ServiceEndpoint endpoint(model::ParseMode mode = model::ParseMode::Lenient) const {
        return server::ServiceEndpoint(repository, shared_registry(), clock, mode);
    }

    std::string valid_request_xml() const {
        auto request = brokersim::level_request(corpus.queries[0], 1, 0.5, 10);
        return model::serialize_request(request);
    }
};

const Fixture& fixture() {
    static Fixture f;
    return f;
}

}  // namespace

TEST_CASE("usql endpoint maps results and faults to protocol statuses") {
    auto endpoint = fixture().endpoint();

    SUBCASE("valid request") {
        auto reply = endpoint.usql(fixture().valid_request_xml());
        CHECK(reply.status == 200);
        CHECK(reply.content_type == "application/xml");
        model::USQLResponse response = model::parse_response(reply.body);
        CHECK(response.request_id == "q01-L1");
        CHECK(response.generated_at == 1723900000);
        CHECK(response.entries.size() == 7);  // 3 relevant + 4 in-family distractors
    }

    SUBCASE("malformed XML") {
        auto reply = endpoint.usql("this is <not> usql <");
        CHECK(reply.status == 400);
        CHECK(model::parse_fault(reply.body).code == "SyntaxError");
    }

    SUBCASE("schema violation") {
        auto reply = endpoint.usql(
            "<?xml version=\"1.0\"?><USQLRequest id=\"x\"><Requirements/></USQLRequest>");
        CHECK(reply.status == 422);
        model::Fault fault = model::parse_fault(reply.body);
        CHECK(fault.code == "SchemaError");
        // the parser never yielded a request, so there is no id to echo
        CHECK(fault.request_id.empty());
    }

    SUBCASE("unknown QoS name") {
        auto reply = endpoint.usql(
            "<?xml version=\"1.0\"?><USQLRequest id=\"q\"><Requirements>"
            "<QoS weight=\"1.000000\" name=\"Latency\" operator=\"LE\" "
            "value=\"10.000000\" unit=\"ms\"/>"
            "</Requirements></USQLRequest>");
        CHECK(reply.status == 422);
        model::Fault fault = model::parse_fault(reply.body);
        CHECK(fault.code == "UnknownQoSName");
        CHECK(fault.request_id == "q");  // execute-stage faults echo the id
    }

    SUBCASE("unknown filter name") {
        auto reply = endpoint.usql(
            "<?xml version=\"1.0\"?><USQLRequest id=\"q\">"
            "<Filters><Filter name=\"colour\" value=\"red\"/></Filters>"
            "<Requirements><Capability weight=\"1.000000\" description=\"anything\"/>"
            "</Requirements></USQLRequest>");
        CHECK(reply.status == 422);
        CHECK(model::parse_fault(reply.body).code == "UnknownFilterName");
    }

    SUBCASE("unknown target broker") {
        auto reply = endpoint.usql(
            "<?xml version=\"1.0\"?><USQLRequest id=\"q\">"
            "<Targets><Target>ghost</Target></Targets>"
            "<Requirements><Capability weight=\"1.000000\" description=\"anything\"/>"
            "</Requirements></USQLRequest>");
        CHECK(reply.status == 422);
        CHECK(model::parse_fault(reply.body).code == "UnknownTarget");
    }
}

TEST_CASE("lenient mode collects warnings where strict mode faults") {
    const std::string off_schema =
        "<?xml version=\"1.0\"?><USQLRequest id=\"w\" mood=\"optimistic\">"
        "<Requirements><Capability weight=\"1.000000\" description=\"anything\"/>"
        "</Requirements></USQLRequest>";

    auto lenient = fixture().endpoint(model::ParseMode::Lenient).usql(off_schema);
    CHECK(lenient.status == 200);
    CHECK_FALSE(lenient.warnings.empty());

    auto strict = fixture().endpoint(model::ParseMode::Strict).usql(off_schema);
    CHECK(strict.status == 422);
    CHECK(model::parse_fault(strict.body).code == "SchemaError");
}

TEST_CASE("health and stats report the live store") {
    auto endpoint = fixture().endpoint();

    auto health = endpoint.health();
    CHECK(health.status == 200);
    CHECK(health.body == "ok\n");

    auto stats = endpoint.stats();
    CHECK(stats.status == 200);
    CHECK(stats.content_type == "text/plain");
    CHECK(stats.body.find("advertisements 9") != std::string::npos);
    CHECK(stats.body.find("broker sim-web") != std::string::npos);
    CHECK(stats.body.find("broker sim-p2p") != std::string::npos);
    CHECK(stats.body.find("broker sim-grid") != std::string::npos);
    CHECK(stats.body.find("serviceType WebService") != std::string::npos);
    CHECK(stats.body.find("serviceType P2PService") != std::string::npos);
    CHECK(stats.body.find("serviceType GridService") != std::string::npos);
}

TEST_CASE("http server serves the endpoint byte-for-byte") {
    auto endpoint = fixture().endpoint();
    server::HttpServer http(fixture().endpoint());
    const int port = http.start("127.0.0.1", 0);
    REQUIRE(port > 0);
    httplib::Client client("127.0.0.1", port);

    SUBCASE("usql success, fault and syntax paths") {
        const std::string request_xml = fixture().valid_request_xml();
        auto direct = endpoint.usql(request_xml);
        auto res = client.Post("/usql", request_xml, "application/xml");
        REQUIRE(res);
        CHECK(res->status == direct.status);
        CHECK(res->body == direct.body);
        CHECK(res->get_header_value("Content-Type") == "application/xml");

        auto bad = client.Post("/usql", "broken <", "application/xml");
        REQUIRE(bad);
        CHECK(bad->status == 400);
        CHECK(model::parse_fault(bad->body).code == "SyntaxError");

        const std::string off_schema =
            "<?xml version=\"1.0\"?><USQLRequest id=\"w\" mood=\"optimistic\">"
            "<Requirements><Capability weight=\"1.000000\" description=\"anything\"/>"
            "</Requirements></USQLRequest>";
        auto warned = client.Post("/usql", off_schema, "application/xml");
        REQUIRE(warned);
        CHECK(warned->status == 200);
        CHECK(warned->has_header("X-USQL-Warning"));
    }

    SUBCASE("health and stats") {
        auto health = client.Get("/health");
        REQUIRE(health);
        CHECK(health->status == 200);
        CHECK(health->body == "ok\n");

        auto stats = client.Get("/stats");
        REQUIRE(stats);
        CHECK(stats->status == 200);
        CHECK(stats->body == endpoint.stats().body);
    }

    http.stop();
}

TEST_CASE("concurrent clients all receive the same deterministic response") {
    server::HttpServer http(fixture().endpoint());
    const int port = http.start("127.0.0.1", 0);
    REQUIRE(port > 0);

    const std::string request_xml = fixture().valid_request_xml();
    const std::string expected = fixture().endpoint().usql(request_xml).body;

    constexpr int kThreads = 8;
    constexpr int kRequestsEach = 6;
    std::vector<std::thread> workers;
    std::vector<int> failures(kThreads, 0);
    for (int t = 0; t < kThreads; ++t) {
        workers.emplace_back([&, t] {
            httplib::Client client("127.0.0.1", port);
            for (int i = 0; i < kRequestsEach; ++i) {
                auto res = client.Post("/usql", request_xml, "application/xml");
                if (!res || res->status != 200 || res->body != expected) ++failures[t];
            }
        });
    }
    for (auto& worker : workers) worker.join();
    for (int t = 0; t < kThreads; ++t) CHECK(failures[t] == 0);

    http.stop();
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <json.hpp>

#include "proteus/brokersim.hpp"
#include "proteus/clock.hpp"
#include "proteus/crawler.hpp"
#include "proteus/plugins.hpp"
#include "proteus/repository.hpp"
#include "proteus/server.hpp"
#include "proteus/usql_xml.hpp"

// Every test here drives the built binary through a shell, capturing exit
// code and both streams, exactly as an operator would experience it.

using namespace proteus;
namespace fs = std::filesystem;

namespace {

const std::string kDataDir = PROTEUS_DATA_DIR;
const std::string kCliPath = PROTEUS_CLI_PATH;
constexpr std::int64_t kEpoch = 1723900000;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return bytes.str();
}

fs::path scratch_root() {
    static fs::path root = [] {
        fs::path dir = fs::temp_directory_path() / "proteus-cli";
        fs::remove_all(dir);
        fs::create_directories(dir);
        return dir;
    }();
    return root;
}

RunResult run_cli(const std::string& args) {
    static std::atomic<int> counter{0};
    const int id = counter.fetch_add(1);
    const fs::path io = scratch_root() / "io";
    fs::create_directories(io);
    const fs::path out = io / ("out-" + std::to_string(id));
    const fs::path err = io / ("err-" + std::to_string(id));

    const std::string command =
        kCliPath + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(command.c_str());

    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out);
    result.err = slurp(err);
    return result;
}

std::string engine_flags() {
    return "--data-dir " + kDataDir + " --clock-fixed " + std::to_string(kEpoch);
}

// Corpus generated once, store crawled once through the binary itself.
struct CliFixture {
    fs::path corpus_dir = scratch_root() / "corpus";
    fs::path store = scratch_root() / "store.db";
    brokersim::SimCorpus corpus;
    fs::path request_file = scratch_root() / "request.xml";

    CliFixture() : corpus(brokersim::generate(make_spec(), corpus_dir)) {
        auto crawl = run_cli("crawl --once --config " + (corpus_dir / "brokers.conf").string() +
                             " --store " + store.string() + " " + engine_flags());
        REQUIRE(crawl.exit_code == 0);

        auto request = brokersim::level_request(corpus.queries[0], 1, 0.5, 10);
        std::ofstream(request_file, std::ios::binary) << model::serialize_request(request);
    }

    static brokersim::SimCorpusSpec make_spec() {
        brokersim::SimCorpusSpec spec;
        spec.query_count = 3;
        spec.ambient_count = 9;
        return spec;
    }
};

const CliFixture& cli_fixture() {
    static CliFixture f;
    return f;
}

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

}  // namespace

TEST_CASE("binary self-documents") {
    auto result = run_cli("--help");
    CHECK(result.exit_code == 0);
    for (const char* subcommand : {"crawl", "query", "serve", "eval", "plugins"}) {
        CHECK(result.out.find(subcommand) != std::string::npos);
    }
}

TEST_CASE("crawl reports each broker and persists a deterministic store") {
    const auto& fixture = cli_fixture();

    auto result = run_cli("crawl --once --config " +
                          (fixture.corpus_dir / "brokers.conf").string() + " --store " +
                          (scratch_root() / "store-2.db").string() + " " + engine_flags());
    CHECK(result.exit_code == 0);
    for (const char* broker : {"sim-web", "sim-p2p", "sim-grid"}) {
        CHECK(result.out.find(std::string(broker) + " found=10 stored=10") !=
              std::string::npos);
    }

    // same brokers, same pinned clock: the file comes out identical, both
    // across stores and across repeated crawls into the same store
    const std::string before = slurp(fixture.store);
    CHECK(before == slurp(scratch_root() / "store-2.db"));
    auto again = run_cli("crawl --once --config " +
                         (fixture.corpus_dir / "brokers.conf").string() + " --store " +
                         fixture.store.string() + " " + engine_flags());
    CHECK(again.exit_code == 0);
    CHECK(slurp(fixture.store) == before);
}

TEST_CASE("crawl isolates broker failures") {
    const auto& fixture = cli_fixture();
    const fs::path config = scratch_root() / "half-broken.conf";
    std::ofstream(config) << "good sim-registry 300 path="
                          << (fixture.corpus_dir / "sim-web").string() << "\n"
                          << "bad sim-registry 300 path="
                          << (scratch_root() / "no-such-dir").string() << "\n";

    auto result = run_cli("crawl --once --config " + config.string() + " " + engine_flags());
    CHECK(result.exit_code == 1);
    CHECK(result.out.find("good found=10 stored=10") != std::string::npos);
    const auto bad_line = result.out.find("bad ");
    REQUIRE(bad_line != std::string::npos);
    CHECK(result.out.find("error=", bad_line) != std::string::npos);
}

TEST_CASE("query prints the response and matches the HTTP face byte-for-byte") {
    const auto& fixture = cli_fixture();
    const std::string base = "query --store " + fixture.store.string() + " " + engine_flags();

    auto from_file = run_cli(base + " " + fixture.request_file.string());
    REQUIRE(from_file.exit_code == 0);
    model::USQLResponse response = model::parse_response(from_file.out);
    CHECK(response.request_id == "q01-L1");
    CHECK(response.entries.size() == 7);

    // piping through stdin is the same request
    auto from_stdin = run_cli(base + " - < " + fixture.request_file.string());
    CHECK(from_stdin.exit_code == 0);
    CHECK(from_stdin.out == from_file.out);

    // serve the same store in-process and compare the wire bytes
    repository::Repository repository(fixture.store.string());
    server::HttpServer http(server::ServiceEndpoint(repository, shared_registry(),
                                                    std::make_shared<FixedClock>(kEpoch)));
    const int port = http.start("127.0.0.1", 0);
    httplib::Client client("127.0.0.1", port);
    auto served = client.Post("/usql", slurp(fixture.request_file), "application/xml");
    REQUIRE(served);
    CHECK(served->status == 200);
    CHECK(served->body == from_file.out);
    http.stop();
}

TEST_CASE("query faults print a fault document and exit 2") {
    const auto& fixture = cli_fixture();
    const std::string base = "query --store " + fixture.store.string() + " " + engine_flags();

    const fs::path bad_qos = scratch_root() / "bad-qos.xml";
    std::ofstream(bad_qos) << "<?xml version=\"1.0\"?><USQLRequest id=\"b\"><Requirements>"
                              "<QoS weight=\"1.000000\" name=\"Latency\" operator=\"LE\" "
                              "value=\"10.000000\" unit=\"ms\"/>"
                              "</Requirements></USQLRequest>";
    auto fault = run_cli(base + " " + bad_qos.string());
    CHECK(fault.exit_code == 2);
    CHECK(model::parse_fault(fault.out).code == "UnknownQoSName");

    const fs::path malformed = scratch_root() / "malformed.xml";
    std::ofstream(malformed) << "<USQLRequest";
    auto syntax = run_cli(base + " " + malformed.string());
    CHECK(syntax.exit_code == 2);
    CHECK(model::parse_fault(syntax.out).code == "SyntaxError");
}

TEST_CASE("strict XML mode rejects what lenient mode only warns about") {
    const auto& fixture = cli_fixture();
    const fs::path off_schema = scratch_root() / "off-schema.xml";
    std::ofstream(off_schema)
        << "<?xml version=\"1.0\"?><USQLRequest id=\"w\" mood=\"optimistic\">"
           "<Requirements><Capability weight=\"1.000000\" description=\"anything\"/>"
           "</Requirements></USQLRequest>";
    const std::string base = "query --store " + fixture.store.string() + " " + engine_flags();

    auto lenient = run_cli(base + " " + off_schema.string());
    CHECK(lenient.exit_code == 0);
    CHECK(lenient.err.find("warning") != std::string::npos);

    auto strict = run_cli(base + " --strict-xml " + off_schema.string());
    CHECK(strict.exit_code == 2);
    CHECK(model::parse_fault(strict.out).code == "SchemaError");
}

TEST_CASE("explain prints the per-requirement breakdown") {
    const auto& fixture = cli_fixture();
    const std::string base = "query --store " + fixture.store.string() + " " + engine_flags();
    const std::string relevant_id = fixture.corpus.queries[0].relevant_ids.front();

    auto result =
        run_cli(base + " --explain " + relevant_id + " " + fixture.request_file.string());
    REQUIRE(result.exit_code == 0);
    CHECK(result.out.find("advertisement " + relevant_id) != std::string::npos);
    CHECK(result.out.find("Capability") != std::string::npos);
    CHECK(result.out.find("degreeOfMatch 1.000000") != std::string::npos);

    auto missing = run_cli(base + " --explain ffffffffffffffff " +
                           fixture.request_file.string());
    CHECK(missing.exit_code == 2);
    CHECK(model::parse_fault(missing.out).code == "NotFound");
}

TEST_CASE("eval emits the metrics report") {
    auto result = run_cli("eval --queries 1 --ambient 2 --json --out-dir " +
                          (scratch_root() / "eval-corpus").string() + " " + engine_flags());
    REQUIRE(result.exit_code == 0);
    const auto report = nlohmann::json::parse(result.out);
    REQUIRE(report.at("levels").size() == 3);
    CHECK(report.at("levels").at(2).at("meanF1").get<double>() == 1.0);
    CHECK(report.at("queries").size() == 3);
}

TEST_CASE("plugins lists the registry") {
    auto result = run_cli("plugins --data-dir " + kDataDir);
    CHECK(result.exit_code == 0);
    for (const char* key : {"token-cosine", "taxonomy-path", "ResponseTime", "sim-registry"}) {
        CHECK(result.out.find(key) != std::string::npos);
    }
}

TEST_CASE("operational failures exit 1 with a diagnostic") {
    auto result = run_cli("crawl --once --config " +
                          (scratch_root() / "absent.conf").string() + " " + engine_flags());
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("error") != std::string::npos);
    CHECK(result.out.empty());
}

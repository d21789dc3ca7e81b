// proteus: unified service discovery over heterogeneous brokers.
//
// One static binary with subcommands: crawl populates the advertisement
// store from configured brokers, query executes a USQL request against it,
// serve exposes the query processor over HTTP, eval runs the synthetic
// corpus harnesses, plugins lists the registry.
//
// Exit codes: 0 success, 1 operational failure (configuration, storage,
// broker errors), 2 query fault (the fault document is printed to stdout).

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "proteus/brokersim.hpp"
#include "proteus/clock.hpp"
#include "proteus/crawler.hpp"
#include "proteus/errors.hpp"
#include "proteus/model.hpp"
#include "proteus/plugins.hpp"
#include "proteus/queryproc.hpp"
#include "proteus/repository.hpp"
#include "proteus/server.hpp"
#include "proteus/usql_xml.hpp"

namespace {

using namespace proteus;

struct EngineOptions {
    std::string data_dir = "data";
    std::string taxonomy_path;  // default <data-dir>/taxonomy.tsv
    std::string store_path;     // empty = volatile store
    std::optional<std::int64_t> fixed_clock_epoch;
};

void add_engine_flags(CLI::App* cmd, EngineOptions& opts) {
    cmd->add_option("--data-dir", opts.data_dir,
                    "Directory with the taxonomy, datatype-promotion and QoS-unit tables")
        ->capture_default_str();
    cmd->add_option("--taxonomy", opts.taxonomy_path,
                    "Taxonomy file (default: <data-dir>/taxonomy.tsv)");
    cmd->add_option("--store", opts.store_path,
                    "Advertisement store file (omitted: in-memory only)");
    cmd->add_option("--clock-fixed", opts.fixed_clock_epoch,
                    "Freeze the engine clock at this epoch second (deterministic output)");
}

// Registry with every built-in plugin, a repository (volatile or bound to
// --store), and the configured clock.
struct Engine {
    plugins::Registry registry;
    std::unique_ptr<repository::Repository> repository;
    std::shared_ptr<const Clock> clock;
};

std::unique_ptr<Engine> make_engine(const EngineOptions& opts) {
    auto engine = std::make_unique<Engine>();
    const std::string taxonomy_path =
        opts.taxonomy_path.empty() ? opts.data_dir + "/taxonomy.tsv" : opts.taxonomy_path;
    auto taxonomy = std::make_shared<const plugins::OntologyTaxonomy>(
        plugins::OntologyTaxonomy::load_file(taxonomy_path));
    plugins::register_builtin_matchers(engine->registry, opts.data_dir, std::move(taxonomy));
    crawler::register_builtin_crawlers(engine->registry);
    engine->repository = opts.store_path.empty()
                             ? std::make_unique<repository::Repository>()
                             : std::make_unique<repository::Repository>(opts.store_path);
    if (opts.fixed_clock_epoch) {
        engine->clock = std::make_shared<FixedClock>(*opts.fixed_clock_epoch);
    } else {
        engine->clock = std::make_shared<SystemClock>();
    }
    return engine;
}

std::string read_request_bytes(const std::string& path) {
    if (path.empty() || path == "-") {
        return std::string(std::istreambuf_iterator<char>(std::cin), {});
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open request file '" + path + "'");
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void print_crawl_report(const crawler::CrawlReport& report) {
    std::cout << report.broker_id << " found=" << report.publications_found
              << " stored=" << report.advertisements_stored
              << " parseFailures=" << report.parse_failures.size();
    if (report.error) std::cout << " error=\"" << *report.error << "\"";
    std::cout << "\n";
}

int cmd_crawl(const EngineOptions& opts, const std::string& config_path, bool once,
              unsigned interval_seconds) {
    auto engine = make_engine(opts);
    auto brokers = crawler::load_broker_config(config_path);
    crawler::Crawler crawler(engine->registry, *engine->repository, engine->clock);

    if (once) {
        bool all_ok = true;
        for (const auto& report : crawler.crawl_once(brokers)) {
            print_crawl_report(report);
            all_ok = all_ok && !report.error.has_value();
        }
        return all_ok ? 0 : 1;
    }
    for (;;) {
        for (const auto& report : crawler.tick(brokers)) print_crawl_report(report);
        std::this_thread::sleep_for(std::chrono::seconds(interval_seconds));
    }
}

int cmd_explain(const Engine& engine, const std::string& request_xml,
                const std::string& advertisement_id, model::ParseMode mode) {
    model::ParsedRequest parsed;
    queryproc::Explanation explanation;
    try {
        parsed = model::parse_request(request_xml, mode);
        queryproc::QueryProcessor processor(*engine.repository, engine.registry, engine.clock);
        explanation = processor.explain(parsed.request, advertisement_id);
    } catch (const Error& e) {
        std::cout << model::serialize_fault({"", e.code(), e.what()});
        return 2;
    }
    for (const std::string& warning : parsed.warnings) {
        std::cerr << "warning: " << warning << "\n";
    }

    std::cout << "advertisement " << explanation.advertisement_id << "\n";
    for (const auto& pair : explanation.pairs) {
        std::cout << "[" << pair.requirement_index << "] "
                  << model::to_string(pair.requirement.kind)
                  << " weight=" << model::format_decimal(pair.requirement.weight)
                  << " matcher=" << pair.matcher;
        if (!pair.property) std::cout << " (unpaired)";
        std::cout << " score=" << model::format_decimal(pair.score);
        if (pair.text_arm) std::cout << " text=" << model::format_decimal(*pair.text_arm);
        if (pair.ontology_arm) {
            std::cout << " ontology=" << model::format_decimal(*pair.ontology_arm);
        }
        if (pair.datatype_arm) {
            std::cout << " datatype=" << model::format_decimal(*pair.datatype_arm);
        }
        std::cout << "\n";
    }
    std::cout << "degreeOfMatch " << model::format_decimal(explanation.degree) << "\n";
    return 0;
}

int cmd_query(const EngineOptions& opts, const std::string& request_path, bool strict_xml,
              const std::string& explain_id) {
    auto engine = make_engine(opts);
    const std::string request_xml = read_request_bytes(request_path);
    const auto mode = strict_xml ? model::ParseMode::Strict : model::ParseMode::Lenient;

    if (!explain_id.empty()) return cmd_explain(*engine, request_xml, explain_id, mode);

    // same code path as POST /usql so the two faces cannot drift apart
    server::ServiceEndpoint endpoint(*engine->repository, engine->registry, engine->clock,
                                     mode);
    server::HttpReply reply = endpoint.usql(request_xml);
    for (const std::string& warning : reply.warnings) {
        std::cerr << "warning: " << warning << "\n";
    }
    if (reply.status == 500) {
        std::cerr << "error: " << reply.body;
        return 1;
    }
    std::cout << reply.body;
    return reply.status == 200 ? 0 : 2;
}

int cmd_serve(const EngineOptions& opts, const std::string& host, int port,
              const std::string& config_path, bool background_crawl, bool strict_xml,
              unsigned interval_seconds) {
    auto engine = make_engine(opts);
    crawler::Crawler crawler(engine->registry, *engine->repository, engine->clock);

    std::atomic<bool> stopping{false};
    std::thread crawl_thread;
    if (background_crawl) {
        auto brokers = crawler::load_broker_config(config_path);
        for (const auto& report : crawler.crawl_once(brokers)) print_crawl_report(report);
        crawl_thread = std::thread([&crawler, &stopping, interval_seconds,
                                    brokers = std::move(brokers)] {
            while (!stopping.load()) {
                crawler.tick(brokers);
                for (unsigned i = 0; i < interval_seconds * 10 && !stopping.load(); ++i) {
                    std::this_thread::sleep_for(std::chrono::milliseconds(100));
                }
            }
        });
    }

    const auto mode = strict_xml ? model::ParseMode::Strict : model::ParseMode::Lenient;
    server::ServiceEndpoint endpoint(*engine->repository, engine->registry, engine->clock,
                                     mode);
    server::HttpServer http(std::move(endpoint));
    std::cout << "listening on " << host << ":" << port << "\n";
    try {
        http.run(host, port);  // blocks until the process is stopped
    } catch (...) {
        stopping.store(true);
        if (crawl_thread.joinable()) crawl_thread.join();
        throw;
    }
    stopping.store(true);
    if (crawl_thread.joinable()) crawl_thread.join();
    return 0;
}

int cmd_eval(const EngineOptions& opts, std::uint64_t seed, std::size_t queries,
             std::size_t ambient, const std::string& corpus_spec_path,
             const std::string& out_dir, bool json_output,
             const std::vector<std::size_t>& scale_sizes) {
    auto engine = make_engine(opts);

    if (!scale_sizes.empty()) {
        brokersim::ScaleReport report =
            brokersim::scale_bench(scale_sizes, queries, seed, engine->registry, out_dir);
        std::cout << (json_output ? brokersim::render_json(report)
                                  : brokersim::render_text(report));
        return 0;
    }

    brokersim::SimCorpusSpec spec;
    if (!corpus_spec_path.empty()) {
        spec = brokersim::parse_corpus_spec(corpus_spec_path);
    } else {
        spec.seed = seed;
        spec.query_count = queries;
        spec.ambient_count = ambient;
    }
    brokersim::SimCorpus corpus = brokersim::generate(spec, out_dir);

    crawler::Crawler crawler(engine->registry, *engine->repository, engine->clock);
    auto brokers =
        crawler::load_broker_config((corpus.root / "brokers.conf").string());
    for (const auto& report : crawler.crawl_once(brokers)) {
        if (report.error) {
            throw ConfigError("crawl of generated corpus failed for broker '" +
                              report.broker_id + "': " + *report.error);
        }
    }

    queryproc::QueryProcessor processor(*engine->repository, engine->registry, engine->clock);
    brokersim::EvalReport report = brokersim::evaluate(corpus, processor);
    std::cout << (json_output ? brokersim::render_json(report)
                              : brokersim::render_text(report));
    return 0;
}

int cmd_plugins(const EngineOptions& opts) {
    auto engine = make_engine(opts);
    std::printf("%-16s  %-40s  %s\n", "kind", "key", "version");
    for (const auto& descriptor : engine->registry.list_all()) {
        std::printf("%-16s  %-40s  %s\n",
                    std::string(plugins::to_string(descriptor.kind)).c_str(),
                    descriptor.key.c_str(), descriptor.version.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"proteus: unified service discovery over heterogeneous brokers"};
    app.require_subcommand(1);

    EngineOptions opts;
    std::string config_path = "brokers.conf";
    bool once = false;
    unsigned interval_seconds = 1;
    std::string request_path;
    bool strict_xml = false;
    std::string explain_id;
    std::string host = "0.0.0.0";
    int port = 8080;
    bool background_crawl = false;
    std::uint64_t seed = 42;
    std::size_t queries = 20;
    std::size_t ambient = 60;
    std::string corpus_spec_path;
    std::string out_dir = "eval-corpus";
    bool json_output = false;
    std::vector<std::size_t> scale_sizes;

    CLI::App* crawl = app.add_subcommand("crawl", "Harvest broker publications into the store");
    add_engine_flags(crawl, opts);
    crawl->add_option("--config", config_path, "Broker configuration file")
        ->envname("PROTEUS_CONFIG")
        ->capture_default_str();
    crawl->add_flag("--once", once, "Crawl every broker once and exit");
    crawl->add_option("--interval", interval_seconds,
                      "Scheduler poll interval in seconds (without --once)")
        ->capture_default_str();

    CLI::App* query =
        app.add_subcommand("query", "Execute a USQL request against the store");
    add_engine_flags(query, opts);
    query->add_option("request", request_path, "Request document ('-' or omitted: stdin)");
    query->add_flag("--strict-xml", strict_xml,
                    "Reject unknown elements/attributes instead of collecting warnings");
    query->add_option("--explain", explain_id,
                      "Print the scoring breakdown against this advertisement id");

    CLI::App* serve = app.add_subcommand("serve", "Expose the query processor over HTTP");
    add_engine_flags(serve, opts);
    serve->add_option("--host", host, "Bind address")->capture_default_str();
    serve->add_option("--port", port, "Bind port")->capture_default_str();
    serve->add_option("--config", config_path, "Broker configuration file (with --crawl)")
        ->envname("PROTEUS_CONFIG")
        ->capture_default_str();
    serve->add_flag("--crawl", background_crawl,
                    "Crawl the configured brokers once at startup, then on a schedule");
    serve->add_flag("--strict-xml", strict_xml,
                    "Reject unknown elements/attributes instead of collecting warnings");
    serve->add_option("--interval", interval_seconds,
                      "Background crawl scheduler interval in seconds")
        ->capture_default_str();

    CLI::App* eval =
        app.add_subcommand("eval", "Generate a synthetic corpus and score the engine on it");
    add_engine_flags(eval, opts);
    eval->add_option("--seed", seed, "Corpus generation seed")->capture_default_str();
    eval->add_option("--queries", queries, "Query concepts (also the --scale battery size)")
        ->capture_default_str();
    eval->add_option("--ambient", ambient, "Unrelated filler services")
        ->capture_default_str();
    eval->add_option("--corpus", corpus_spec_path,
                     "Corpus spec file (overrides --seed/--queries/--ambient)");
    eval->add_option("--out-dir", out_dir, "Where the corpus is written")
        ->capture_default_str();
    eval->add_flag("--json", json_output, "Emit the report as JSON");
    eval->add_option("--scale", scale_sizes,
                     "Comma-separated corpus sizes: run the scaling bench instead")
        ->delimiter(',');

    CLI::App* plugins_cmd = app.add_subcommand("plugins", "List the registered plugins");
    add_engine_flags(plugins_cmd, opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*crawl) return cmd_crawl(opts, config_path, once, interval_seconds);
        if (*query) return cmd_query(opts, request_path, strict_xml, explain_id);
        if (*serve) {
            return cmd_serve(opts, host, port, config_path, background_crawl, strict_xml,
                             interval_seconds);
        }
        if (*eval) {
            return cmd_eval(opts, seed, queries, ambient, corpus_spec_path, out_dir,
                            json_output, scale_sizes);
        }
        if (*plugins_cmd) return cmd_plugins(opts);
    } catch (const Error& e) {
        std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

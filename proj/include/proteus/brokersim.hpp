#pragma once

// Synthetic broker corpus generator with constructive ground truth, plus the
// precision/recall and scaling harnesses that run against it.
//
// The generator plans a fixed cast per query concept: services built to
// satisfy the query (relevant), lookalikes that only share surface text
// (near distractors), and exact copies with a broken QoS promise (QoS
// distractors), padded with unrelated ambient services. Because relevance is
// decided at construction time, precision and recall are well-defined, and
// each incremental query level (capability -> +interface -> +QoS) peels off
// one distractor class by design.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proteus/model.hpp"
#include "proteus/plugins.hpp"
#include "proteus/queryproc.hpp"

namespace proteus::brokersim {

struct SimBroker {
    std::string id;
    std::string broker_type;  // a registered harvester key, e.g. "sim-registry"

    bool operator==(const SimBroker&) const = default;
};

// Corpus shape. Every query concept contributes 7 documents (3 relevant,
// 2 near distractors, 2 QoS distractors), spread round-robin over the
// brokers, so total publications = 7 * query_count + ambient_count.
struct SimCorpusSpec {
    std::uint64_t seed = 42;
    std::size_t query_count = 20;
    std::size_t ambient_count = 60;
    double generation_threshold = 0.5;
    std::vector<SimBroker> brokers = default_brokers();

    // one simulated broker per service class
    static std::vector<SimBroker> default_brokers() {
        return {{"sim-web", "sim-registry"},
                {"sim-p2p", "sim-p2p"},
                {"sim-grid", "sim-grid"}};
    }
};

// `seed 42` style key/value lines plus `broker <id> <type>` rows.
// Throws ConfigError on unknown keys or malformed lines.
SimCorpusSpec parse_corpus_spec(const std::filesystem::path& path);

struct ElementSpec {
    std::string description;
    model::DataTypeRef data_type;
};

struct QoSSpec {
    std::string name;
    model::QoSOperator op = model::QoSOperator::LE;
    model::QoSValue bound;
};

// One query concept with its incremental formulations and ground truth.
struct SimQuery {
    std::string id;     // "q01", "q02", ...
    std::string topic;  // travel | health | crisis
    std::string capability;
    std::string concept_uri;  // ontology URI shared with the relevant services
    ElementSpec input;
    ElementSpec output;
    QoSSpec qos;
    std::string example_provider;           // provider of one relevant service
    std::vector<std::string> relevant_ids;  // advertisement ids, sorted
};

struct SimCorpus {
    std::uint64_t seed = 0;
    double generation_threshold = 0.5;
    std::filesystem::path root;  // holds broker dirs, brokers.conf, manifest.json
    std::vector<SimBroker> brokers;
    std::map<std::string, std::size_t> publications_per_broker;
    std::size_t total_advertisements = 0;
    std::vector<SimQuery> queries;
};

// Materializes the corpus under output_dir: one directory of description
// documents per broker, a brokers.conf wired to the sim harvesters, and
// manifest.json with the queries and ground truth. Same spec (including
// seed) always produces byte-identical files. Before writing, every planned
// advertisement is scored against its query with a self-contained copy of
// the matchmaking rules; a mislabeled plan throws std::logic_error rather
// than producing a corpus with wrong ground truth.
SimCorpus generate(const SimCorpusSpec& spec, const std::filesystem::path& output_dir);

// Rehydrates a SimCorpus from a manifest.json written by generate().
SimCorpus load_manifest(const std::filesystem::path& manifest_path);

// The incremental query formulations. Level 1 asks for the capability only
// (weight 2); level 2 adds the typed input and output elements (weight 1);
// level 3 adds the QoS constraint (weight 1.5). The capability keeps the top
// weight at every level so that an off-topic service can never ride in on
// interface or QoS agreement alone.
model::USQLRequest level_request(const SimQuery& query, int level, double min_degree = 0.5,
                                 std::uint32_t max_results = 500);

struct QueryLevelMetrics {
    std::string query_id;
    int level = 1;
    std::size_t relevant = 0;
    std::size_t returned = 0;
    std::size_t true_positives = 0;
    double precision = 0.0;  // 0 when nothing was returned
    double recall = 0.0;
    double f1 = 0.0;  // 0 when precision + recall == 0
};

struct LevelSummary {
    int level = 1;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
    double mean_f1 = 0.0;
};

struct EvalReport {
    std::vector<QueryLevelMetrics> rows;  // query-major, level-minor
    std::vector<LevelSummary> levels;     // one per level, ascending
};

// Runs every query at levels 1..3 against the processor (whose repository
// must already hold the crawled corpus) and scores the results against the
// manifest ground truth.
EvalReport evaluate(const SimCorpus& corpus, const queryproc::QueryProcessor& processor);

std::string render_text(const EvalReport& report);
std::string render_json(const EvalReport& report);

struct ScaleRow {
    std::size_t corpus_size = 0;
    double crawl_seconds = 0.0;
    double median_query_ms = 0.0;
    double p95_query_ms = 0.0;
    double queries_per_second = 0.0;
};

struct ScaleReport {
    std::vector<ScaleRow> rows;  // one per corpus size, ascending
    // |median(run1) - median(run2)| / median(run1) over the largest corpus,
    // quoted in the report header as the observed run-to-run noise
    double rerun_median_delta_pct = 0.0;
};

// Generates, crawls and queries a corpus per size (sizes must be positive
// and strictly ascending; throws ConfigError otherwise). Each query carries
// one selective provider filter so the scored candidate set stays roughly
// constant while the store grows. The registry must provide the sim
// harvesters/parsers and the built-in matchers.
ScaleReport scale_bench(const std::vector<std::size_t>& sizes, std::size_t query_count,
                        std::uint64_t seed, const plugins::Registry& registry,
                        const std::filesystem::path& work_dir);

std::string render_text(const ScaleReport& report);
std::string render_json(const ScaleReport& report);

}  // namespace proteus::brokersim

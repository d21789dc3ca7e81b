#include "proteus/brokersim.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "proteus/algebra.hpp"
#include "proteus/clock.hpp"
#include "proteus/crawler.hpp"
#include "proteus/errors.hpp"
#include "proteus/repository.hpp"

namespace proteus::brokersim {

namespace fs = std::filesystem;
using nlohmann::json;
using model::DataTypeRef;
using model::QoSOperator;
using model::RequirementKind;
using model::ServiceRequirement;
using model::ServiceType;
using model::USQLRequest;

namespace {

constexpr const char* kXsdNs = "http://www.w3.org/2001/XMLSchema";
constexpr const char* kJsonNs = "urn:proteus:datatypes:json";

// Level weights. The capability carries the top weight at every level so an
// off-topic service can never clear the threshold on interface or QoS
// agreement alone: every term of the degree formula is multiplied by the
// top-group mean.
constexpr double kInterfaceWeight = 1.0;
constexpr double kQoSWeight = 1.5;
constexpr double kCapabilityWeight = 2.0;

// Word material for the query concepts: verb/qualifier/noun triples with no
// word shared between rows, so capabilities of different queries never
// overlap in more than stray punctuation. Beyond the table, rows are reused
// with a numeric suffix welded onto every word, which keeps the
// disjointness.
struct QueryWords {
    const char* topic;
    const char* verb;
    const char* qualifier;
    const char* noun;
};

constexpr QueryWords kQueryWords[] = {
    {"travel", "book", "international", "flight"},
    {"travel", "reserve", "boutique", "hotel"},
    {"travel", "plan", "coastal", "cruise"},
    {"travel", "rent", "compact", "automobile"},
    {"travel", "schedule", "scenic", "excursion"},
    {"travel", "compare", "budget", "fares"},
    {"travel", "track", "checked", "luggage"},
    {"health", "locate", "nearest", "clinic"},
    {"health", "transfer", "encrypted", "records"},
    {"health", "analyze", "blood", "sample"},
    {"health", "order", "generic", "prescription"},
    {"health", "monitor", "cardiac", "rhythm"},
    {"health", "match", "organ", "donors"},
    {"health", "sequence", "viral", "genome"},
    {"crisis", "dispatch", "rescue", "teams"},
    {"crisis", "map", "flooded", "regions"},
    {"crisis", "broadcast", "evacuation", "alerts"},
    {"crisis", "allocate", "emergency", "shelters"},
    {"crisis", "translate", "distress", "messages"},
    {"crisis", "predict", "aftershock", "intensity"},
    {"crisis", "relay", "satellite", "mosaics"},
};
constexpr std::size_t kQueryWordRows = sizeof(kQueryWords) / sizeof(kQueryWords[0]);

// Ambient services draw from a pool disjoint from every query word and from
// the fixed filler tokens ("premium", "paperwork", "service", the interface
// phrases), so an ambient capability scores exactly 0 against every query.
constexpr const char* kAmbientWords[] = {
    "compress",  "archive",  "bundles",   "convert",   "currency",  "ledger",
    "audit",     "render",   "polygon",   "mesh",      "texture",   "forecast",
    "pollen",    "cache",    "replicate", "backup",    "snapshot",  "throttle",
    "telemetry", "beacon",   "calibrate", "orbit",     "tide",      "gauge",
};
constexpr std::size_t kAmbientWordCount = sizeof(kAmbientWords) / sizeof(kAmbientWords[0]);

constexpr const char* kVendorNames[] = {
    "alfa",   "bravo",   "charlie", "delta",  "echo",   "foxtrot", "golf",
    "hotel",  "india",   "juliett", "kilo",   "lima",   "mike",    "november",
    "oscar",  "papa",    "quebec",  "romeo",  "sierra", "tango",   "uniform",
    "victor", "whiskey", "xray",    "yankee", "zulu",
};
constexpr std::size_t kVendorNameCount = sizeof(kVendorNames) / sizeof(kVendorNames[0]);
constexpr std::size_t kVendorBlockSize = 17;  // services per provider

constexpr const char* kXsdTypeCycle[] = {"string", "int", "long", "float", "double", "decimal"};

// The p2p description format names its types in JSON vocabulary; this is the
// lossy projection used when a planned document lands on the p2p broker.
std::string json_local_for(const std::string& xsd_local) {
    if (xsd_local == "string" || xsd_local == "boolean") return xsd_local;
    if (xsd_local == "int" || xsd_local == "long") return "integer";
    return "number";
}

std::string vendor_name(std::size_t block) {
    if (block < kVendorNameCount) return std::string("vendor-") + kVendorNames[block];
    return "vendor-" + std::to_string(block);
}

std::string pascal_case(const std::string& phrase) {
    std::string out;
    bool boundary = true;
    for (char c : phrase) {
        if (c == ' ') {
            boundary = true;
            continue;
        }
        out += boundary ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
        boundary = false;
    }
    return out;
}

std::string format_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

std::string xml_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

const char* extension_for(const std::string& broker_type) {
    if (broker_type == "sim-registry") return ".wsdl";
    if (broker_type == "sim-p2p") return ".json";
    if (broker_type == "sim-grid") return ".grid";
    throw ConfigError("unsupported sim broker type '" + broker_type +
                      "' (expected sim-registry, sim-p2p or sim-grid)");
}

ServiceType service_type_for(const std::string& broker_type) {
    if (broker_type == "sim-registry") return ServiceType::WebService;
    if (broker_type == "sim-p2p") return ServiceType::P2PService;
    return ServiceType::GridService;
}

// Everything needed both to write a description document and to predict the
// advertisement the crawler will distill from it.
struct PlanElement {
    std::string name;
    std::string description;
    std::string xsd_local;
};

struct PlanQoS {
    std::string name;
    double value = 0.0;
    std::string unit;
};

struct DocPlan {
    std::size_t broker_index = 0;
    std::string filename;
    std::string op_name;
    std::string provider;
    std::string topic;
    std::string capability;
    std::optional<std::string> concept_uri;
    PlanElement input;
    PlanElement output;
    std::vector<PlanQoS> qos;
    std::string pipe;    // p2p documents only
    int query_index = -1;  // -1 for ambient
    int role = -1;         // 0..2 relevant, 3..4 near distractor, 5..6 QoS distractor
};

model::ServiceAdvertisement expected_advertisement(const DocPlan& plan,
                                                   const SimBroker& broker) {
    const ServiceType type = service_type_for(broker.broker_type);
    const bool json_types = type == ServiceType::P2PService;

    model::ServiceAdvertisement ad;
    ad.id = model::advertisement_id(broker.id, plan.filename, plan.op_name);
    ad.service_type = type;
    ad.provider = plan.provider;
    ad.operation_name = plan.op_name;
    ad.source_broker_id = broker.id;
    ad.capability.kind = RequirementKind::Capability;
    ad.capability.name = plan.op_name;
    ad.capability.description = plan.capability;
    ad.capability.ontology_reference = plan.concept_uri;

    auto element = [&](const PlanElement& spec, RequirementKind kind) {
        model::AdvertisedProperty p;
        p.kind = kind;
        p.name = spec.name;
        p.description = spec.description;
        p.data_type = json_types ? DataTypeRef{kJsonNs, json_local_for(spec.xsd_local)}
                                 : DataTypeRef{kXsdNs, spec.xsd_local};
        return p;
    };
    ad.inputs.push_back(element(plan.input, RequirementKind::InputElement));
    ad.outputs.push_back(element(plan.output, RequirementKind::OutputElement));

    for (const PlanQoS& q : plan.qos) {
        model::AdvertisedProperty p;
        p.kind = RequirementKind::QoS;
        p.name = q.name;
        p.qos_name = q.name;
        p.qos_value = model::QoSValue{q.value, q.unit};
        ad.qos_properties.push_back(std::move(p));
    }

    ad.filter_attributes["provider"] = plan.provider;
    ad.filter_attributes["serviceType"] = std::string(model::to_string(type));
    ad.invocation.service_type = type;
    ad.invocation.entries["operation"] = plan.op_name;
    return ad;
}

// ---------------------------------------------------------------------------
// Document writers, one per description format the sim harvesters feed.

std::string wsdl_document(const DocPlan& plan) {
    const std::string op = xml_escape(plan.op_name);
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<definitions name=\"" << op << "\" targetNamespace=\"urn:sim:web:" << op
        << "\" classification=\"" << xml_escape(plan.topic) << "\">\n";
    out << "  <message name=\"" << op << "Request\">\n";
    out << "    <part name=\"" << xml_escape(plan.input.name) << "\" type=\"xsd:"
        << plan.input.xsd_local << "\" description=\"" << xml_escape(plan.input.description)
        << "\"/>\n";
    out << "  </message>\n";
    out << "  <message name=\"" << op << "Response\">\n";
    out << "    <part name=\"" << xml_escape(plan.output.name) << "\" type=\"xsd:"
        << plan.output.xsd_local << "\" description=\"" << xml_escape(plan.output.description)
        << "\"/>\n";
    out << "  </message>\n";
    out << "  <portType name=\"" << op << "Port\">\n";
    out << "    <operation name=\"" << op << "\"";
    if (plan.concept_uri) out << " modelReference=\"" << xml_escape(*plan.concept_uri) << "\"";
    out << ">\n";
    out << "      <documentation>" << xml_escape(plan.capability) << "</documentation>\n";
    out << "      <input message=\"" << op << "Request\"/>\n";
    out << "      <output message=\"" << op << "Response\"/>\n";
    out << "    </operation>\n";
    out << "  </portType>\n";
    out << "  <service name=\"" << op << "Service\" provider=\"" << xml_escape(plan.provider)
        << "\">\n";
    out << "    <port binding=\"soap11\" location=\"https://" << plan.provider
        << ".example/" << op << "\"/>\n";
    out << "  </service>\n";
    for (const PlanQoS& q : plan.qos) {
        out << "  <qos name=\"" << xml_escape(q.name) << "\" value=\"" << format_number(q.value)
            << "\"";
        if (!q.unit.empty()) out << " unit=\"" << xml_escape(q.unit) << "\"";
        out << "/>\n";
    }
    out << "</definitions>\n";
    return out.str();
}

std::string grid_document(const DocPlan& plan) {
    const std::string op = xml_escape(plan.op_name);
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<gridService name=\"" << op << "\" provider=\"" << xml_escape(plan.provider)
        << "\" virtualOrganization=\"" << xml_escape(plan.topic) << "-vo\">\n";
    out << "  <operation name=\"" << op << "\" factory=\"https://" << plan.provider
        << ".example/services/" << op << "Factory\"";
    if (plan.concept_uri) out << " modelReference=\"" << xml_escape(*plan.concept_uri) << "\"";
    out << ">\n";
    out << "    <documentation>" << xml_escape(plan.capability) << "</documentation>\n";
    out << "    <input name=\"" << xml_escape(plan.input.name) << "\" type=\"xsd:"
        << plan.input.xsd_local << "\" description=\"" << xml_escape(plan.input.description)
        << "\"/>\n";
    out << "    <output name=\"" << xml_escape(plan.output.name) << "\" type=\"xsd:"
        << plan.output.xsd_local << "\" description=\"" << xml_escape(plan.output.description)
        << "\"/>\n";
    out << "  </operation>\n";
    for (const PlanQoS& q : plan.qos) {
        out << "  <qos name=\"" << xml_escape(q.name) << "\" value=\"" << format_number(q.value)
            << "\"";
        if (!q.unit.empty()) out << " unit=\"" << xml_escape(q.unit) << "\"";
        out << "/>\n";
    }
    out << "</gridService>\n";
    return out.str();
}

std::string p2p_document(const DocPlan& plan) {
    json op;
    op["name"] = plan.op_name;
    op["description"] = plan.capability;
    if (plan.concept_uri) op["concept"] = *plan.concept_uri;
    op["inputs"] = json::array({{{"name", plan.input.name},
                                 {"description", plan.input.description},
                                 {"type", json_local_for(plan.input.xsd_local)}}});
    op["outputs"] = json::array({{{"name", plan.output.name},
                                  {"description", plan.output.description},
                                  {"type", json_local_for(plan.output.xsd_local)}}});

    json doc;
    doc["service"] = plan.op_name;
    doc["provider"] = plan.provider;
    doc["peerGroup"] = plan.topic + "-peers";
    doc["pipe"] = plan.pipe;
    if (!plan.qos.empty()) {
        json qos = json::array();
        for (const PlanQoS& q : plan.qos) {
            json entry;
            entry["name"] = q.name;
            entry["value"] = q.value;
            if (!q.unit.empty()) entry["unit"] = q.unit;
            qos.push_back(std::move(entry));
        }
        doc["qos"] = std::move(qos);
    }
    doc["operations"] = json::array({std::move(op)});
    return doc.dump(2) + "\n";
}

std::string render_document(const DocPlan& plan, const SimBroker& broker) {
    switch (service_type_for(broker.broker_type)) {
        case ServiceType::WebService: return wsdl_document(plan);
        case ServiceType::P2PService: return p2p_document(plan);
        case ServiceType::GridService: return grid_document(plan);
    }
    throw std::logic_error("unhandled service type");
}

// ---------------------------------------------------------------------------
// Generation-time scoring oracle: a self-contained matcher suite (empty
// taxonomy, exact-type matching, fixed unit table) sufficient for the values
// this corpus produces. Used only to prove the ground-truth labels before
// anything is written.

algebra::MatcherSuite verification_suite() {
    algebra::MatcherSuite suite;
    static const plugins::TokenCosineTextMatcher text;
    static const plugins::TaxonomyPathOntologyMatcher ontology{
        std::make_shared<const plugins::OntologyTaxonomy>(
            plugins::OntologyTaxonomy::from_edges({}))};
    static const std::shared_ptr<const plugins::UnitTable> units = [] {
        auto table = std::make_shared<plugins::UnitTable>();
        table->add("ms", "time", 0.001);
        table->add("s", "time", 1.0);
        table->add("ratio", "ratio", 1.0);
        table->add("percent", "ratio", 0.01);
        table->add("%", "ratio", 0.01);
        return table;
    }();
    static const plugins::NumericQoSMatcher numeric{units};

    suite.text = [](const std::string& a, const std::string& b) { return text.similarity(a, b); };
    suite.ontology = [](const std::string& a, const std::string& b) {
        return ontology.similarity(a, b);
    };
    // generated documents use either identical or entirely unrelated types,
    // so exact (namespace, localName) equality is the whole story here
    suite.datatype = [](const DataTypeRef& requested, const DataTypeRef& advertised) {
        return requested == advertised ? 1.0 : 0.0;
    };
    for (const char* name : {"ResponseTime", "Availability", "Reliability", "Throughput"}) {
        suite.qos[name] = [](const ServiceRequirement& r, const model::AdvertisedProperty& p) {
            return numeric.match(r, p);
        };
    }
    return suite;
}

double oracle_degree(const USQLRequest& request, const model::ServiceAdvertisement& ad,
                     const algebra::MatcherSuite& suite) {
    return algebra::degree_of_match(
               algebra::partition_by_weight(algebra::pair_requirements(request, ad, suite)),
               suite)
        .degree;
}

[[noreturn]] void mislabeled(const DocPlan& plan, int level, double degree, bool expected_in) {
    throw std::logic_error("corpus generation produced a mislabeled advertisement: '" +
                           plan.filename + "' scored " + format_number(degree) + " at level " +
                           std::to_string(level) + " but was planned to be " +
                           (expected_in ? "at or above" : "below") + " the threshold");
}

void verify_ground_truth(const std::vector<DocPlan>& plans,
                         const std::vector<model::ServiceAdvertisement>& expected,
                         const std::vector<SimQuery>& queries, double threshold) {
    const algebra::MatcherSuite suite = verification_suite();

    for (std::size_t i = 0; i < plans.size(); ++i) {
        const DocPlan& plan = plans[i];
        if (plan.query_index >= 0) {
            const SimQuery& query = queries[static_cast<std::size_t>(plan.query_index)];
            for (int level = 1; level <= 3; ++level) {
                double d = oracle_degree(level_request(query, level, 0.0), expected[i], suite);
                bool relevant = plan.role <= 2;
                bool should_pass = relevant || (plan.role <= 4 ? level == 1 : level <= 2);
                if (should_pass != (d >= threshold)) mislabeled(plan, level, d, should_pass);
            }
        }
        // no document may leak into another concept's results, at any level;
        // level 1 bounds the others because the capability mean multiplies
        // every term of the degree
        for (std::size_t q = 0; q < queries.size(); ++q) {
            if (static_cast<int>(q) == plan.query_index) continue;
            double d = oracle_degree(level_request(queries[q], 1, 0.0), expected[i], suite);
            if (d >= threshold) mislabeled(plan, 1, d, false);
        }
    }
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot open '" + path.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw StorageError("failed writing '" + path.string() + "'");
}

std::string two_digit_id(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "q%02zu", index + 1);
    return buf;
}

json manifest_json(const SimCorpus& corpus) {
    json brokers = json::array();
    for (const SimBroker& broker : corpus.brokers) {
        brokers.push_back({{"id", broker.id},
                           {"type", broker.broker_type},
                           {"publications", corpus.publications_per_broker.at(broker.id)}});
    }
    json queries = json::array();
    for (const SimQuery& query : corpus.queries) {
        json q;
        q["id"] = query.id;
        q["topic"] = query.topic;
        q["capability"] = query.capability;
        q["concept"] = query.concept_uri;
        q["input"] = {{"description", query.input.description},
                      {"namespace", query.input.data_type.namespace_uri},
                      {"type", query.input.data_type.local_name}};
        q["output"] = {{"description", query.output.description},
                       {"namespace", query.output.data_type.namespace_uri},
                       {"type", query.output.data_type.local_name}};
        q["qos"] = {{"name", query.qos.name},
                    {"operator", std::string(model::to_string(query.qos.op))},
                    {"value", query.qos.bound.value},
                    {"unit", query.qos.bound.unit}};
        q["exampleProvider"] = query.example_provider;
        q["relevant"] = query.relevant_ids;
        queries.push_back(std::move(q));
    }
    json manifest;
    manifest["seed"] = corpus.seed;
    manifest["generationThreshold"] = corpus.generation_threshold;
    manifest["totalAdvertisements"] = corpus.total_advertisements;
    manifest["brokers"] = std::move(brokers);
    manifest["queries"] = std::move(queries);
    return manifest;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

}  // namespace

SimCorpus generate(const SimCorpusSpec& spec, const fs::path& output_dir) {
    if (spec.query_count == 0) throw ConfigError("query_count must be positive");
    if (spec.brokers.empty()) throw ConfigError("at least one sim broker is required");
    if (!(spec.generation_threshold > 0.0) || spec.generation_threshold > 1.0) {
        throw ConfigError("generation threshold must be in (0,1]");
    }
    {
        std::set<std::string> ids;
        for (const SimBroker& broker : spec.brokers) {
            extension_for(broker.broker_type);  // validates the type
            if (broker.id.empty() || !ids.insert(broker.id).second) {
                throw ConfigError("sim broker ids must be non-empty and unique");
            }
        }
    }

    std::mt19937_64 rng(spec.seed);
    const std::size_t broker_count = spec.brokers.size();

    // --- plan the queries
    std::vector<SimQuery> queries;
    queries.reserve(spec.query_count);
    for (std::size_t q = 0; q < spec.query_count; ++q) {
        const QueryWords& words = kQueryWords[q % kQueryWordRows];
        const std::string suffix = q < kQueryWordRows ? "" : std::to_string(q / kQueryWordRows);
        const std::string verb = words.verb + suffix;
        const std::string qualifier = words.qualifier + suffix;
        const std::string noun = words.noun + suffix;

        SimQuery query;
        query.id = two_digit_id(q);
        query.topic = words.topic;
        query.capability = verb + " " + qualifier + " " + noun;
        query.concept_uri = "urn:sim:concepts:" + query.topic + "-" + noun;
        query.input = {noun + " request payload",
                       DataTypeRef{kXsdNs, kXsdTypeCycle[q % 6]}};
        query.output = {noun + " result summary",
                        DataTypeRef{kXsdNs, kXsdTypeCycle[(q + 3) % 6]}};
        if (query.topic == "travel") {
            query.qos = {"ResponseTime", QoSOperator::LE, {1000.0, "ms"}};
        } else if (query.topic == "health") {
            query.qos = {"Availability", QoSOperator::GE, {0.99, "ratio"}};
        } else {
            query.qos = {"Throughput", QoSOperator::GE, {50.0, ""}};
        }
        queries.push_back(std::move(query));
    }

    // --- plan the documents: 7 per query, then the ambient filler
    std::vector<DocPlan> plans;
    plans.reserve(spec.query_count * 7 + spec.ambient_count);
    static const char* kRoleTags[] = {"r1", "r2", "r3", "b1", "b2", "c1", "c2"};

    auto next_plan = [&](DocPlan plan) {
        plan.broker_index = plans.size() % broker_count;
        plan.provider = vendor_name(plans.size() / kVendorBlockSize);
        const SimBroker& broker = spec.brokers[plan.broker_index];
        plan.filename += extension_for(broker.broker_type);
        if (service_type_for(broker.broker_type) == ServiceType::P2PService) {
            plan.pipe = "urn:jxta:uuid-" + hex64(rng()) + hex64(rng());
        }
        plans.push_back(std::move(plan));
    };

    for (std::size_t q = 0; q < spec.query_count; ++q) {
        SimQuery& query = queries[q];
        const QueryWords& words = kQueryWords[q % kQueryWordRows];
        const std::string suffix = q < kQueryWordRows ? "" : std::to_string(q / kQueryWordRows);
        const std::string verb = words.verb + suffix;
        const std::string qualifier = words.qualifier + suffix;
        const std::string noun = words.noun + suffix;

        // QoS values: comfortably inside the bound for the genuine services,
        // clearly outside it for the copycats
        double satisfying = 0.0;
        double violating = 0.0;
        if (query.topic == "travel") {
            satisfying = 200.0 + 50.0 * static_cast<double>(q % 7);
            violating = 5000.0;
        } else if (query.topic == "health") {
            satisfying = 0.995;
            violating = 0.9;
        } else {
            satisfying = 120.0;
            violating = 8.0;
        }
        const PlanQoS good_qos{query.qos.name, satisfying, query.qos.bound.unit};
        const PlanQoS bad_qos{query.qos.name, violating, query.qos.bound.unit};

        const PlanElement good_input{noun + "Request", query.input.description,
                                     query.input.data_type.local_name};
        const PlanElement good_output{noun + "Result", query.output.description,
                                      query.output.data_type.local_name};
        const PlanElement junk_input{"payloadBlob", "opaque binary blob", "boolean"};
        const PlanElement junk_output{"dumpBytes", "raw byte dump", "boolean"};

        for (int role = 0; role < 7; ++role) {
            DocPlan plan;
            plan.query_index = static_cast<int>(q);
            plan.role = role;
            plan.topic = query.topic;
            plan.filename = query.id + "-" + kRoleTags[role];
            switch (role) {
                case 0:  // built to satisfy the query verbatim
                    plan.capability = query.capability;
                    break;
                case 1:  // extra token; the shared concept keeps it on-topic
                    plan.capability = query.capability + " service";
                    break;
                case 2:  // different qualifier, same concept
                    plan.capability = verb + " premium " + noun;
                    break;
                case 3:  // surface lookalike: verb + qualifier, wrong object
                    plan.capability = verb + " " + qualifier + " paperwork";
                    break;
                case 4:  // surface lookalike: qualifier + noun, wrong action
                    plan.capability = qualifier + " " + noun + " paperwork";
                    break;
                case 5:  // exact copy with a broken QoS promise
                    plan.capability = query.capability;
                    break;
                case 6:
                    plan.capability = query.capability + " service";
                    break;
            }
            plan.op_name = pascal_case(plan.capability);
            const bool relevant = role <= 2;
            const bool near_distractor = role == 3 || role == 4;
            if (!near_distractor) {
                plan.concept_uri = query.concept_uri;
                plan.input = good_input;
                plan.output = good_output;
                plan.qos = {relevant ? good_qos : bad_qos};
            } else {
                plan.input = junk_input;
                plan.output = junk_output;
            }
            next_plan(std::move(plan));
            if (relevant) {
                const DocPlan& placed = plans.back();
                const SimBroker& broker = spec.brokers[placed.broker_index];
                query.relevant_ids.push_back(
                    model::advertisement_id(broker.id, placed.filename, placed.op_name));
                if (role == 0) query.example_provider = placed.provider;
            }
        }
        std::sort(query.relevant_ids.begin(), query.relevant_ids.end());
    }

    for (std::size_t i = 0; i < spec.ambient_count; ++i) {
        std::array<std::size_t, 3> picks{};
        picks[0] = rng() % kAmbientWordCount;
        do { picks[1] = rng() % kAmbientWordCount; } while (picks[1] == picks[0]);
        do {
            picks[2] = rng() % kAmbientWordCount;
        } while (picks[2] == picks[0] || picks[2] == picks[1]);
        const std::string w1 = kAmbientWords[picks[0]];
        const std::string w2 = kAmbientWords[picks[1]];
        const std::string w3 = kAmbientWords[picks[2]];

        DocPlan plan;
        plan.topic = "ambient";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "ambient-%03zu", i + 1);
        plan.filename = buf;
        plan.capability = w1 + " " + w2 + " " + w3;
        plan.op_name = pascal_case(plan.capability);
        plan.concept_uri = "urn:sim:concepts:ambient-" + std::to_string(i + 1);
        plan.input = {"sourceFeed", w1 + " input feed", kXsdTypeCycle[i % 6]};
        plan.output = {"resultDigest", w1 + " output digest", kXsdTypeCycle[(i + 2) % 6]};
        if (i % 3 == 0) {
            plan.qos = {{"ResponseTime", 250.0, "ms"}};
        } else if (i % 3 == 1) {
            plan.qos = {{"ResponseTime", 9000.0, "ms"}};
        }
        next_plan(std::move(plan));
    }

    // --- prove the labels before writing anything
    std::vector<model::ServiceAdvertisement> expected;
    expected.reserve(plans.size());
    for (const DocPlan& plan : plans) {
        expected.push_back(expected_advertisement(plan, spec.brokers[plan.broker_index]));
    }
    verify_ground_truth(plans, expected, queries, spec.generation_threshold);

    // --- materialize
    SimCorpus corpus;
    corpus.seed = spec.seed;
    corpus.generation_threshold = spec.generation_threshold;
    corpus.root = output_dir;
    corpus.brokers = spec.brokers;
    corpus.total_advertisements = plans.size();
    corpus.queries = std::move(queries);

    fs::create_directories(output_dir);
    for (const SimBroker& broker : spec.brokers) {
        // replace any stale content wholesale so counts stay exact
        fs::remove_all(output_dir / broker.id);
        fs::create_directories(output_dir / broker.id);
        corpus.publications_per_broker[broker.id] = 0;
    }
    for (const DocPlan& plan : plans) {
        const SimBroker& broker = spec.brokers[plan.broker_index];
        write_file(output_dir / broker.id / plan.filename, render_document(plan, broker));
        corpus.publications_per_broker[broker.id] += 1;
    }

    std::ostringstream conf;
    conf << "# simulated broker fleet (generated)\n";
    for (const SimBroker& broker : spec.brokers) {
        conf << broker.id << " " << broker.broker_type << " 300 path=" << broker.id << "\n";
    }
    write_file(output_dir / "brokers.conf", conf.str());
    write_file(output_dir / "manifest.json", manifest_json(corpus).dump(2) + "\n");
    return corpus;
}

SimCorpus load_manifest(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw ConfigError("cannot open manifest '" + manifest_path.string() + "'");
    json manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object()) {
        throw ConfigError("manifest '" + manifest_path.string() + "' is not a JSON object");
    }
    try {
        SimCorpus corpus;
        corpus.seed = manifest.at("seed").get<std::uint64_t>();
        corpus.generation_threshold = manifest.at("generationThreshold").get<double>();
        corpus.root = manifest_path.parent_path();
        corpus.total_advertisements = manifest.at("totalAdvertisements").get<std::size_t>();
        for (const json& b : manifest.at("brokers")) {
            SimBroker broker{b.at("id").get<std::string>(), b.at("type").get<std::string>()};
            corpus.publications_per_broker[broker.id] = b.at("publications").get<std::size_t>();
            corpus.brokers.push_back(std::move(broker));
        }
        for (const json& q : manifest.at("queries")) {
            SimQuery query;
            query.id = q.at("id").get<std::string>();
            query.topic = q.at("topic").get<std::string>();
            query.capability = q.at("capability").get<std::string>();
            query.concept_uri = q.at("concept").get<std::string>();
            query.input = {q.at("input").at("description").get<std::string>(),
                           DataTypeRef{q.at("input").at("namespace").get<std::string>(),
                                       q.at("input").at("type").get<std::string>()}};
            query.output = {q.at("output").at("description").get<std::string>(),
                            DataTypeRef{q.at("output").at("namespace").get<std::string>(),
                                        q.at("output").at("type").get<std::string>()}};
            query.qos.name = q.at("qos").at("name").get<std::string>();
            query.qos.op =
                model::qos_operator_from_string(q.at("qos").at("operator").get<std::string>());
            query.qos.bound = {q.at("qos").at("value").get<double>(),
                               q.at("qos").at("unit").get<std::string>()};
            query.example_provider = q.at("exampleProvider").get<std::string>();
            query.relevant_ids = q.at("relevant").get<std::vector<std::string>>();
            corpus.queries.push_back(std::move(query));
        }
        return corpus;
    } catch (const json::exception& e) {
        throw ConfigError("manifest '" + manifest_path.string() + "': " + e.what());
    }
}

SimCorpusSpec parse_corpus_spec(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open corpus spec '" + path.string() + "'");
    SimCorpusSpec spec;
    std::vector<SimBroker> brokers;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        std::istringstream tokens(line);
        std::string key;
        if (!(tokens >> key) || key[0] == '#') continue;
        const std::string where = "corpus spec '" + path.string() + "' line " +
                                  std::to_string(line_number);
        if (key == "broker") {
            SimBroker broker;
            if (!(tokens >> broker.id >> broker.broker_type)) {
                throw ConfigError(where + ": expected `broker <id> <type>`");
            }
            brokers.push_back(std::move(broker));
            continue;
        }
        std::string value;
        if (!(tokens >> value)) throw ConfigError(where + ": missing value for '" + key + "'");
        try {
            if (key == "seed") {
                spec.seed = std::stoull(value);
            } else if (key == "queries") {
                spec.query_count = std::stoull(value);
            } else if (key == "ambient") {
                spec.ambient_count = std::stoull(value);
            } else if (key == "threshold") {
                spec.generation_threshold = std::stod(value);
            } else {
                throw ConfigError(where + ": unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw ConfigError(where + ": '" + value + "' is not a number");
        } catch (const std::out_of_range&) {
            throw ConfigError(where + ": '" + value + "' is out of range");
        }
    }
    if (!brokers.empty()) spec.brokers = std::move(brokers);
    return spec;
}

USQLRequest level_request(const SimQuery& query, int level, double min_degree,
                          std::uint32_t max_results) {
    if (level < 1 || level > 3) {
        throw ConfigError("query level must be 1, 2 or 3, got " + std::to_string(level));
    }
    USQLRequest request;
    request.request_id = query.id + "-L" + std::to_string(level);
    request.min_degree_of_match = min_degree;
    request.max_results = max_results;

    ServiceRequirement capability;
    capability.kind = RequirementKind::Capability;
    capability.description = query.capability;
    capability.ontology_reference = query.concept_uri;
    capability.weight = kCapabilityWeight;
    request.requirements.push_back(std::move(capability));

    if (level >= 2) {
        ServiceRequirement input;
        input.kind = RequirementKind::InputElement;
        input.description = query.input.description;
        input.data_type = query.input.data_type;
        input.weight = kInterfaceWeight;
        request.requirements.push_back(std::move(input));

        ServiceRequirement output;
        output.kind = RequirementKind::OutputElement;
        output.description = query.output.description;
        output.data_type = query.output.data_type;
        output.weight = kInterfaceWeight;
        request.requirements.push_back(std::move(output));
    }
    if (level >= 3) {
        ServiceRequirement qos;
        qos.kind = RequirementKind::QoS;
        qos.qos_name = query.qos.name;
        qos.qos_operator = query.qos.op;
        qos.qos_value = query.qos.bound;
        qos.weight = kQoSWeight;
        request.requirements.push_back(std::move(qos));
    }
    return request;
}

EvalReport evaluate(const SimCorpus& corpus, const queryproc::QueryProcessor& processor) {
    EvalReport report;
    std::array<double, 3> precision_sum{};
    std::array<double, 3> recall_sum{};
    std::array<double, 3> f1_sum{};

    for (const SimQuery& query : corpus.queries) {
        const std::set<std::string> relevant(query.relevant_ids.begin(),
                                             query.relevant_ids.end());
        for (int level = 1; level <= 3; ++level) {
            auto response =
                processor.execute(level_request(query, level, corpus.generation_threshold));
            QueryLevelMetrics row;
            row.query_id = query.id;
            row.level = level;
            row.relevant = relevant.size();
            row.returned = response.entries.size();
            for (const auto& entry : response.entries) {
                if (relevant.count(entry.advertisement_id)) ++row.true_positives;
            }
            row.precision = row.returned == 0
                                ? 0.0
                                : static_cast<double>(row.true_positives) /
                                      static_cast<double>(row.returned);
            row.recall = row.relevant == 0 ? 0.0
                                           : static_cast<double>(row.true_positives) /
                                                 static_cast<double>(row.relevant);
            row.f1 = row.precision + row.recall > 0.0
                         ? 2.0 * row.precision * row.recall / (row.precision + row.recall)
                         : 0.0;
            precision_sum[level - 1] += row.precision;
            recall_sum[level - 1] += row.recall;
            f1_sum[level - 1] += row.f1;
            report.rows.push_back(std::move(row));
        }
    }

    const double n = static_cast<double>(corpus.queries.size());
    for (int level = 1; level <= 3; ++level) {
        LevelSummary summary;
        summary.level = level;
        if (n > 0) {
            summary.mean_precision = precision_sum[level - 1] / n;
            summary.mean_recall = recall_sum[level - 1] / n;
            summary.mean_f1 = f1_sum[level - 1] / n;
        }
        report.levels.push_back(summary);
    }
    return report;
}

std::string render_text(const EvalReport& report) {
    std::ostringstream out;
    out << "query  level  returned  relevant  tp  precision  recall      f1\n";
    char buf[128];
    for (const QueryLevelMetrics& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%-6s    L%d  %8zu  %8zu  %2zu     %6.4f  %6.4f  %6.4f\n",
                      row.query_id.c_str(), row.level, row.returned, row.relevant,
                      row.true_positives, row.precision, row.recall, row.f1);
        out << buf;
    }
    for (const LevelSummary& level : report.levels) {
        std::snprintf(buf, sizeof(buf),
                      "mean      L%d  %8s  %8s  %2s     %6.4f  %6.4f  %6.4f\n", level.level, "",
                      "", "", level.mean_precision, level.mean_recall, level.mean_f1);
        out << buf;
    }
    return out.str();
}

std::string render_json(const EvalReport& report) {
    json rows = json::array();
    for (const QueryLevelMetrics& row : report.rows) {
        rows.push_back({{"query", row.query_id},
                        {"level", row.level},
                        {"returned", row.returned},
                        {"relevant", row.relevant},
                        {"truePositives", row.true_positives},
                        {"precision", row.precision},
                        {"recall", row.recall},
                        {"f1", row.f1}});
    }
    json levels = json::array();
    for (const LevelSummary& level : report.levels) {
        levels.push_back({{"level", level.level},
                          {"meanPrecision", level.mean_precision},
                          {"meanRecall", level.mean_recall},
                          {"meanF1", level.mean_f1}});
    }
    return json{{"queries", std::move(rows)}, {"levels", std::move(levels)}}.dump(2) + "\n";
}

namespace {

struct BatteryStats {
    double median_ms = 0.0;
    double p95_ms = 0.0;
    double queries_per_second = 0.0;
};

BatteryStats run_battery(const queryproc::QueryProcessor& processor,
                         const std::vector<USQLRequest>& battery) {
    std::vector<double> timings_ms;
    timings_ms.reserve(battery.size());
    const auto battery_start = std::chrono::steady_clock::now();
    for (const USQLRequest& request : battery) {
        const auto start = std::chrono::steady_clock::now();
        (void)processor.execute(request);
        const auto stop = std::chrono::steady_clock::now();
        timings_ms.push_back(
            std::chrono::duration<double, std::milli>(stop - start).count());
    }
    const double total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - battery_start).count();

    std::sort(timings_ms.begin(), timings_ms.end());
    BatteryStats stats;
    const std::size_t n = timings_ms.size();
    stats.median_ms = timings_ms[n / 2];
    const std::size_t p95_rank = (n * 95 + 99) / 100;  // nearest-rank, 1-based
    stats.p95_ms = timings_ms[std::min(n - 1, p95_rank == 0 ? 0 : p95_rank - 1)];
    stats.queries_per_second =
        total_seconds > 0.0 ? static_cast<double>(n) / total_seconds : 0.0;
    return stats;
}

}  // namespace

ScaleReport scale_bench(const std::vector<std::size_t>& sizes, std::size_t query_count,
                        std::uint64_t seed, const plugins::Registry& registry,
                        const fs::path& work_dir) {
    if (sizes.empty()) throw ConfigError("scale bench needs at least one corpus size");
    if (query_count == 0) throw ConfigError("scale bench needs a positive query count");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] < 8) throw ConfigError("corpus sizes must be at least 8");
        if (i > 0 && sizes[i] <= sizes[i - 1]) {
            throw ConfigError("corpus sizes must be strictly ascending");
        }
    }

    ScaleReport report;
    for (std::size_t size : sizes) {
        SimCorpusSpec spec;
        spec.seed = seed;
        spec.query_count = size / 8;
        spec.ambient_count = size - 7 * spec.query_count;
        SimCorpus corpus = generate(spec, work_dir / ("scale-" + std::to_string(size)));

        repository::Repository repo;
        auto clock = std::make_shared<SystemClock>();
        crawler::Crawler crawler(registry, repo, clock);
        auto brokers = crawler::load_broker_config((corpus.root / "brokers.conf").string());

        const auto crawl_start = std::chrono::steady_clock::now();
        auto crawl_reports = crawler.crawl_once(brokers);
        const double crawl_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - crawl_start)
                .count();
        for (const auto& crawl_report : crawl_reports) {
            if (crawl_report.error) {
                throw ConfigError("scale bench crawl failed for broker '" +
                                  crawl_report.broker_id + "': " + *crawl_report.error);
            }
            if (!crawl_report.parse_failures.empty()) {
                throw std::logic_error("scale bench generated an unparseable document: " +
                                       crawl_report.parse_failures.front().second);
            }
        }
        if (repo.size() != corpus.total_advertisements) {
            throw std::logic_error("scale bench crawl stored " + std::to_string(repo.size()) +
                                   " advertisements, expected " +
                                   std::to_string(corpus.total_advertisements));
        }

        queryproc::QueryProcessor processor(repo, registry, clock);
        std::vector<USQLRequest> battery;
        battery.reserve(query_count);
        for (std::size_t i = 0; i < query_count; ++i) {
            const SimQuery& query = corpus.queries[i % corpus.queries.size()];
            USQLRequest request = level_request(query, 3, corpus.generation_threshold, 50);
            // one selective filter keeps the scored candidate set near the
            // provider block size no matter how large the store grows
            request.filters.push_back({"provider", query.example_provider});
            battery.push_back(std::move(request));
        }

        BatteryStats first = run_battery(processor, battery);
        BatteryStats second = run_battery(processor, battery);
        if (size == sizes.back() && first.median_ms > 0.0) {
            report.rerun_median_delta_pct =
                100.0 * std::abs(first.median_ms - second.median_ms) / first.median_ms;
        }

        ScaleRow row;
        row.corpus_size = size;
        row.crawl_seconds = crawl_seconds;
        row.median_query_ms = first.median_ms;
        row.p95_query_ms = first.p95_ms;
        row.queries_per_second = first.queries_per_second;
        report.rows.push_back(row);
    }
    return report;
}

std::string render_text(const ScaleReport& report) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "# scale bench: run-to-run median delta %.1f%% on the largest corpus\n",
                  report.rerun_median_delta_pct);
    out << buf;
    out << "corpusSize  crawlSeconds  medianQueryMs  p95QueryMs  queriesPerSecond\n";
    for (const ScaleRow& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%10zu  %12.3f  %13.4f  %10.4f  %16.0f\n",
                      row.corpus_size, row.crawl_seconds, row.median_query_ms, row.p95_query_ms,
                      row.queries_per_second);
        out << buf;
    }
    return out.str();
}

std::string render_json(const ScaleReport& report) {
    json rows = json::array();
    for (const ScaleRow& row : report.rows) {
        rows.push_back({{"corpusSize", row.corpus_size},
                        {"crawlSeconds", row.crawl_seconds},
                        {"medianQueryMs", row.median_query_ms},
                        {"p95QueryMs", row.p95_query_ms},
                        {"queriesPerSecond", row.queries_per_second}});
    }
    return json{{"rerunMedianDeltaPct", report.rerun_median_delta_pct},
                {"rows", std::move(rows)}}
               .dump(2) +
           "\n";
}

}  // namespace proteus::brokersim

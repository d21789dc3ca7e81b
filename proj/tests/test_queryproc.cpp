#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "proteus/clock.hpp"
#include "proteus/errors.hpp"
#include "proteus/plugins.hpp"
#include "proteus/queryproc.hpp"
#include "proteus/repository.hpp"
#include "proteus/usql_xml.hpp"
#include "support/gen.hpp"

using namespace proteus;
using model::AdvertisedProperty;
using model::DataTypeRef;
using model::QoSOperator;
using model::QoSValue;
using model::RequirementKind;
using model::SearchFilter;
using model::ServiceAdvertisement;
using model::ServiceRequirement;
using model::ServiceType;
using model::USQLRequest;
using plugins::Registry;
using queryproc::QueryProcessor;
using repository::Repository;

namespace {

const std::string kDataDir = PROTEUS_DATA_DIR;
const std::string kXsd = "http://www.w3.org/2001/XMLSchema";

std::shared_ptr<const plugins::OntologyTaxonomy> default_taxonomy() {
    static auto taxonomy = std::make_shared<const plugins::OntologyTaxonomy>(
        plugins::OntologyTaxonomy::load_file(kDataDir + "/taxonomy.tsv"));
    return taxonomy;
}

const Registry& shared_registry() {
    static Registry* registry = [] {
        auto* r = new Registry();
        plugins::register_builtin_matchers(*r, kDataDir, default_taxonomy());
        return r;
    }();
    return *registry;
}

std::shared_ptr<FixedClock> fixed_clock() { return std::make_shared<FixedClock>(1723900000); }

// ---------------------------------------------------------------------------
// Builders for the hand-crafted scenarios

ServiceAdvertisement make_ad(const std::string& broker, const std::string& doc,
                             const std::string& op, const std::string& provider,
                             ServiceType type, const std::string& capability_desc) {
    ServiceAdvertisement ad;
    ad.service_type = type;
    ad.provider = provider;
    ad.operation_name = op;
    ad.source_broker_id = broker;
    ad.id = model::advertisement_id(broker, doc, op);
    ad.capability.kind = RequirementKind::Capability;
    ad.capability.name = "capability";
    ad.capability.description = capability_desc;
    ad.filter_attributes["provider"] = provider;
    ad.filter_attributes["serviceType"] = std::string(model::to_string(type));
    ad.invocation.service_type = type;
    ad.invocation.entries["endpoint"] = "https://" + provider + ".example/" + op;
    ad.harvested_at = 1723890000;
    return ad;
}

AdvertisedProperty qos_property(const std::string& name, double value, const std::string& unit) {
    AdvertisedProperty p;
    p.kind = RequirementKind::QoS;
    p.name = name;
    p.qos_name = name;
    p.qos_value = QoSValue{value, unit};
    return p;
}

ServiceRequirement cap_req(const std::string& description, double weight = 1.0) {
    ServiceRequirement r;
    r.kind = RequirementKind::Capability;
    r.description = description;
    r.weight = weight;
    return r;
}

ServiceRequirement qos_req(const std::string& name, QoSOperator op, double value,
                           const std::string& unit, double weight = 1.0) {
    ServiceRequirement r;
    r.kind = RequirementKind::QoS;
    r.qos_name = name;
    r.qos_operator = op;
    r.qos_value = QoSValue{value, unit};
    r.weight = weight;
    return r;
}

USQLRequest single_cap_request(const std::string& description, double min_degree = 0.5) {
    USQLRequest req;
    req.requirements.push_back(cap_req(description));
    req.min_degree_of_match = min_degree;
    return req;
}

std::vector<std::string> entry_ids(const model::USQLResponse& response) {
    std::vector<std::string> ids;
    for (const auto& e : response.entries) ids.push_back(e.advertisement_id);
    return ids;
}

// ---------------------------------------------------------------------------
// Reference pipeline for the randomized equivalence test. Pairing, QoS
// evaluation (with its own copy of the unit table), the degree calculation
// (naive long-double form) and ranking are all re-derived here from the
// documented rules rather than shared with the production code; only the raw
// text/ontology similarity values come from the matcher classes themselves,
// which have their own oracles in test_plugins.

const plugins::TokenCosineTextMatcher& ref_text() {
    static plugins::TokenCosineTextMatcher matcher;
    return matcher;
}

const plugins::TaxonomyPathOntologyMatcher& ref_ontology() {
    static plugins::TaxonomyPathOntologyMatcher matcher{default_taxonomy()};
    return matcher;
}

double ref_datatype(const DataTypeRef& requested, const DataTypeRef& advertised) {
    if (requested.namespace_uri != advertised.namespace_uri) return 0.0;
    if (requested == advertised) return 1.0;
    static const std::vector<std::array<std::string, 3>> promotions = {
        {kXsd, "int", "long"},
        {kXsd, "int", "decimal"},
        {kXsd, "long", "decimal"},
        {kXsd, "float", "double"},
        {"urn:proteus:datatypes:json", "integer", "number"},
    };
    for (const auto& row : promotions) {
        if (row[0] == requested.namespace_uri && row[1] == requested.local_name &&
            row[2] == advertised.local_name) {
            return 0.8;
        }
    }
    return 0.0;
}

struct RefUnit {
    std::string dimension;
    double factor = 1.0;
};

std::optional<RefUnit> ref_unit(const std::string& unit) {
    if (unit.empty()) return RefUnit{"", 1.0};
    if (unit == "ms") return RefUnit{"time", 0.001};
    if (unit == "s") return RefUnit{"time", 1.0};
    if (unit == "ratio") return RefUnit{"ratio", 1.0};
    if (unit == "percent" || unit == "%") return RefUnit{"ratio", 0.01};
    return std::nullopt;
}

double ref_qos_score(const ServiceRequirement& r, const AdvertisedProperty* p) {
    if (!p || !r.qos_value || !p->qos_value) return 0.0;
    auto required_unit = ref_unit(r.qos_value->unit);
    auto advertised_unit = ref_unit(p->qos_value->unit);
    if (!required_unit || !advertised_unit) return 0.0;
    if (!required_unit->dimension.empty() && !advertised_unit->dimension.empty() &&
        required_unit->dimension != advertised_unit->dimension) {
        return 0.0;
    }
    double required = r.qos_value->value * required_unit->factor;
    double advertised = p->qos_value->value * advertised_unit->factor;
    switch (*r.qos_operator) {
        case QoSOperator::LE: return advertised <= required ? 1.0 : 0.0;
        case QoSOperator::GE: return advertised >= required ? 1.0 : 0.0;
        case QoSOperator::EQ:
            return std::abs(advertised - required) <= 1e-9 * std::max(1.0, std::abs(required))
                       ? 1.0
                       : 0.0;
    }
    return 0.0;
}

double ref_phi(const ServiceRequirement& r, const AdvertisedProperty& p) {
    double alpha = (r.description && p.description)
                       ? ref_text().similarity(*r.description, *p.description)
                       : 0.0;
    double beta = (r.ontology_reference && p.ontology_reference)
                      ? ref_ontology().similarity(*r.ontology_reference, *p.ontology_reference)
                      : 0.0;
    return std::max(alpha, beta);
}

double ref_pair_score(const ServiceRequirement& r, const AdvertisedProperty* p) {
    if (r.kind == RequirementKind::QoS) return ref_qos_score(r, p);
    if (!p) return 0.0;
    if (r.kind == RequirementKind::Capability) return ref_phi(r, *p);
    double gamma =
        (r.data_type && p->data_type) ? ref_datatype(*r.data_type, *p->data_type) : 0.0;
    return 0.5 * (ref_phi(r, *p) + gamma);
}

const AdvertisedProperty* ref_pair_property(const ServiceRequirement& r,
                                            const ServiceAdvertisement& ad) {
    if (r.kind == RequirementKind::Capability) return &ad.capability;
    if (r.kind == RequirementKind::QoS) {
        for (const AdvertisedProperty& p : ad.qos_properties) {
            if (p.qos_name == r.qos_name) return &p;
        }
        return nullptr;
    }
    const std::vector<AdvertisedProperty>* candidates = &ad.resource_properties;
    if (r.kind == RequirementKind::InputElement) candidates = &ad.inputs;
    if (r.kind == RequirementKind::OutputElement) candidates = &ad.outputs;
    const AdvertisedProperty* best = nullptr;
    double best_score = 0.0;
    for (const AdvertisedProperty& candidate : *candidates) {
        double score = ref_pair_score(r, &candidate);
        if (!best || score > best_score) {
            best = &candidate;
            best_score = score;
        }
    }
    return best;
}

// Naive long-double evaluation of d = sum_i w'_i * prod_{j>=i} m_j over the
// scores grouped by weight (groups ascending by weight).
double ref_degree(const std::vector<double>& scores, const std::vector<double>& weights) {
    std::map<double, std::pair<long double, int>> groups;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        groups[weights[i]].first += scores[i];
        groups[weights[i]].second += 1;
    }
    long double weight_sum = 0.0L;
    std::vector<long double> means;
    std::vector<long double> group_weights;
    for (const auto& [weight, sum_count] : groups) {
        weight_sum += weight;
        group_weights.push_back(weight);
        means.push_back(sum_count.first / sum_count.second);
    }
    long double d = 0.0L;
    for (std::size_t i = 0; i < means.size(); ++i) {
        long double term = group_weights[i] / weight_sum;
        for (std::size_t j = i; j < means.size(); ++j) term *= means[j];
        d += term;
    }
    if (d < 0.0L) d = 0.0L;
    if (d > 1.0L) d = 1.0L;
    return static_cast<double>(d);
}

bool ref_retained(const ServiceAdvertisement& ad, const USQLRequest& req) {
    if (!req.targets.empty() &&
        std::find(req.targets.begin(), req.targets.end(), ad.source_broker_id) ==
            req.targets.end()) {
        return false;
    }
    for (const SearchFilter& filter : req.filters) {
        auto it = ad.filter_attributes.find(filter.name);
        if (it == ad.filter_attributes.end() || it->second != filter.value) return false;
    }
    return true;
}

struct RefEntry {
    double degree = 0.0;
    std::string provider;
    std::string name;
    std::string id;
    std::vector<double> scores;  // one per requirement, request order
};

std::vector<RefEntry> ref_execute(const std::vector<ServiceAdvertisement>& corpus,
                                  const USQLRequest& req) {
    std::vector<RefEntry> out;
    for (const ServiceAdvertisement& ad : corpus) {
        if (!ref_retained(ad, req)) continue;
        RefEntry entry;
        std::vector<double> weights;
        for (const ServiceRequirement& r : req.requirements) {
            const AdvertisedProperty* p = ref_pair_property(r, ad);
            entry.scores.push_back(ref_pair_score(r, p));
            weights.push_back(r.weight);
        }
        entry.degree = ref_degree(entry.scores, weights);
        if (entry.degree < req.min_degree_of_match) continue;
        entry.provider = ad.provider;
        entry.name = ad.operation_name;
        entry.id = ad.id;
        out.push_back(std::move(entry));
    }
    std::sort(out.begin(), out.end(), [](const RefEntry& a, const RefEntry& b) {
        if (a.degree != b.degree) return a.degree > b.degree;
        if (a.provider != b.provider) return a.provider < b.provider;
        if (a.name != b.name) return a.name < b.name;
        return a.id < b.id;
    });
    if (out.size() > req.max_results) out.resize(req.max_results);
    return out;
}

std::vector<ServiceAdvertisement> seed_corpus(Repository& repo, gen::Rng& rng,
                                              const std::vector<std::string>& brokers,
                                              std::size_t per_broker) {
    std::vector<ServiceAdvertisement> corpus;
    for (const std::string& broker : brokers) {
        std::vector<ServiceAdvertisement> batch;
        std::set<std::string> seen;
        while (batch.size() < per_broker) {
            ServiceAdvertisement ad = gen::advertisement(rng);
            ad.source_broker_id = broker;
            ad.id = model::advertisement_id(broker, gen::identifier(rng, "doc"),
                                            ad.operation_name);
            if (seen.insert(ad.id).second) batch.push_back(std::move(ad));
        }
        repo.upsert_broker_batch(broker, batch);
        corpus.insert(corpus.end(), batch.begin(), batch.end());
    }
    return corpus;
}

// Requests whose filters/targets are drawn from the corpus itself, so the
// conjunctive retrieval step actually has candidates to narrow down.
USQLRequest corpus_request(gen::Rng& rng, const std::vector<ServiceAdvertisement>& corpus,
                           const std::vector<std::string>& brokers) {
    USQLRequest req;
    req.request_id = gen::identifier(rng, "req");
    static const double kMinDegrees[] = {0.0, 0.3, 0.5, 0.8};
    req.min_degree_of_match = kMinDegrees[rng() % 4];
    static const std::uint32_t kMaxResults[] = {5, 20, 500};
    req.max_results = kMaxResults[rng() % 3];

    std::size_t requirement_count = 1 + rng() % 4;
    for (std::size_t i = 0; i < requirement_count; ++i) {
        req.requirements.push_back(gen::requirement(rng, gen::requirement_kind(rng)));
    }
    if (rng() % 2) {
        // echo one stored capability so high-degree hits exist
        const ServiceAdvertisement& ad = corpus[gen::pick_index(rng, corpus.size())];
        ServiceRequirement r;
        r.kind = RequirementKind::Capability;
        r.description = ad.capability.description;
        r.ontology_reference = ad.capability.ontology_reference;
        r.weight = gen::quantized(rng, 0.25, 8.0);
        req.requirements.push_back(std::move(r));
    }

    if (rng() % 2) {
        const ServiceAdvertisement& ad = corpus[gen::pick_index(rng, corpus.size())];
        switch (rng() % 3) {
            case 0: req.filters.push_back({"provider", ad.provider}); break;
            case 1:
                req.filters.push_back(
                    {"serviceType", std::string(model::to_string(ad.service_type))});
                break;
            default: {
                auto it = ad.filter_attributes.find("classification");
                if (it != ad.filter_attributes.end()) {
                    req.filters.push_back({"classification", it->second});
                }
                break;
            }
        }
        if (rng() % 4 == 0) {
            const ServiceAdvertisement& other = corpus[gen::pick_index(rng, corpus.size())];
            req.filters.push_back(
                {"serviceType", std::string(model::to_string(other.service_type))});
        }
    }
    if (rng() % 3 == 0) {
        for (const std::string& broker : brokers) {
            if (rng() % 2) req.targets.push_back(broker);
        }
    }
    return req;
}

double recompose_degree(const queryproc::Explanation& explanation) {
    std::vector<double> scores;
    std::vector<double> weights;
    for (const auto& pair : explanation.pairs) {
        scores.push_back(pair.score);
        weights.push_back(pair.group_weight);
    }
    return ref_degree(scores, weights);
}

}  // namespace

TEST_CASE("an advertisement matching the capability requirement exactly scores degree 1") {
    Repository repo;
    auto exact = make_ad("broker-a", "flights.wsdl", "BookFlight", "acme-travel",
                         ServiceType::WebService, "book international flight");
    auto near = make_ad("broker-a", "hotels.wsdl", "SearchHotels", "stayfinder",
                        ServiceType::WebService, "search city hotel room");
    auto far = make_ad("broker-a", "render.grid", "renderFrame", "pixel-farm",
                       ServiceType::GridService, "render video frame");
    repo.upsert_broker_batch("broker-a", {exact, near, far});

    QueryProcessor processor(repo, shared_registry(), fixed_clock());
    auto response = processor.execute(single_cap_request("book international flight"));

    REQUIRE(!response.entries.empty());
    const auto& top = response.entries.front();
    CHECK(top.degree_of_match == 1.0);
    CHECK(top.advertisement_id == exact.id);
    CHECK(top.provider == "acme-travel");
    CHECK(top.name == "BookFlight");
    CHECK(top.description == "book international flight");
    CHECK(top.service_type == ServiceType::WebService);
    CHECK(top.invocation.entries.at("endpoint") == "https://acme-travel.example/BookFlight");
    REQUIRE(top.criterion_scores.size() == 1);
    CHECK(top.criterion_scores[0].requirement_index == 0);
    CHECK(top.criterion_scores[0].score == 1.0);
    // nothing else shares a token with the query at >= 0.5
    CHECK(response.entries.size() == 1);
}

TEST_CASE("a violated top-weighted QoS requirement vetoes every candidate") {
    Repository repo;
    auto slow_a = make_ad("broker-a", "a.wsdl", "TranslateText", "wordsmith",
                          ServiceType::WebService, "translate text");
    slow_a.qos_properties.push_back(qos_property("ResponseTime", 2000, "ms"));
    auto slow_b = make_ad("broker-a", "b.wsdl", "TranslateDocument", "polyglot",
                          ServiceType::WebService, "translate text");
    slow_b.qos_properties.push_back(qos_property("ResponseTime", 3, "s"));
    repo.upsert_broker_batch("broker-a", {slow_a, slow_b});

    QueryProcessor processor(repo, shared_registry(), fixed_clock());
    USQLRequest req;
    req.requirements.push_back(cap_req("translate text", 1.0));
    req.requirements.push_back(qos_req("ResponseTime", QoSOperator::LE, 100, "ms", 3.0));

    SUBCASE("the default threshold returns nothing") {
        auto response = processor.execute(req);
        CHECK(response.entries.empty());
    }
    SUBCASE("even a zero threshold only surfaces them with degree 0") {
        req.min_degree_of_match = 0.0;
        auto response = processor.execute(req);
        REQUIRE(response.entries.size() == 2);
        CHECK(response.entries[0].degree_of_match == 0.0);
        CHECK(response.entries[1].degree_of_match == 0.0);
        // the capability still scored 1; the veto came from the QoS group
        CHECK(response.entries[0].criterion_scores[0].score == 1.0);
        CHECK(response.entries[0].criterion_scores[1].score == 0.0);
    }
    SUBCASE("a satisfiable bound lets the same candidates through") {
        req.requirements[1] = qos_req("ResponseTime", QoSOperator::LE, 5, "s", 3.0);
        auto response = processor.execute(req);
        CHECK(response.entries.size() == 2);
        CHECK(response.entries[0].degree_of_match == 1.0);
    }
}

TEST_CASE("minDegreeOfMatch keeps entries at the threshold and drops those below") {
    Repository repo;
    auto exact = make_ad("broker-a", "a.wsdl", "BookFlight", "acme", ServiceType::WebService,
                         "book flight");
    auto half = make_ad("broker-a", "b.wsdl", "BookHotel", "acme", ServiceType::WebService,
                        "book hotel");
    repo.upsert_broker_batch("broker-a", {exact, half});
    QueryProcessor processor(repo, shared_registry(), fixed_clock());

    // {book,flight} vs {book,hotel}: cosine = 1/2 exactly
    auto at_half = processor.execute(single_cap_request("book flight", 0.5));
    CHECK(entry_ids(at_half) == std::vector<std::string>{exact.id, half.id});
    CHECK(at_half.entries[1].degree_of_match == 0.5);

    auto above_half = processor.execute(single_cap_request("book flight", 0.6));
    CHECK(entry_ids(above_half) == std::vector<std::string>{exact.id});
}

TEST_CASE("entries are ordered by degree, then provider, name and advertisement id") {
    Repository repo;
    auto beta = make_ad("broker-a", "b1.wsdl", "BookFlight", "beta-air",
                        ServiceType::WebService, "book flight");
    auto alpha_second = make_ad("broker-a", "a2.wsdl", "ReserveFlight", "alpha-air",
                                ServiceType::WebService, "book flight");
    auto alpha_first = make_ad("broker-a", "a1.wsdl", "BookFlight", "alpha-air",
                               ServiceType::WebService, "book flight");
    // same provider and operation name; the id breaks the tie
    auto alpha_twin = make_ad("broker-a", "a9.wsdl", "BookFlight", "alpha-air",
                              ServiceType::WebService, "book flight");
    auto weaker = make_ad("broker-a", "c1.wsdl", "BookHotel", "aaa-travel",
                          ServiceType::WebService, "book hotel");
    repo.upsert_broker_batch("broker-a", {beta, alpha_second, alpha_first, alpha_twin, weaker});

    QueryProcessor processor(repo, shared_registry(), fixed_clock());
    auto response = processor.execute(single_cap_request("book flight", 0.25));

    std::vector<std::string> twins{alpha_first.id, alpha_twin.id};
    std::sort(twins.begin(), twins.end());
    std::vector<std::string> expected{twins[0], twins[1], alpha_second.id, beta.id, weaker.id};
    CHECK(entry_ids(response) == expected);
    for (std::size_t i = 1; i < response.entries.size(); ++i) {
        CHECK(response.entries[i - 1].degree_of_match >= response.entries[i].degree_of_match);
    }
    // the weaker match ranks last despite the lexicographically smallest provider
    CHECK(response.entries.back().provider == "aaa-travel");
}

TEST_CASE("maxResults truncates after ranking, not before") {
    Repository repo;
    std::vector<ServiceAdvertisement> ads;
    for (int i = 0; i < 5; ++i) {
        ads.push_back(make_ad("broker-a", "doc" + std::to_string(i) + ".wsdl", "Op",
                              "provider-" + std::to_string(i), ServiceType::WebService,
                              "locate parcel"));
    }
    repo.upsert_broker_batch("broker-a", ads);
    QueryProcessor processor(repo, shared_registry(), fixed_clock());

    USQLRequest req = single_cap_request("locate parcel");
    req.max_results = 2;
    auto truncated = processor.execute(req);
    REQUIRE(truncated.entries.size() == 2);
    CHECK(truncated.entries[0].provider == "provider-0");
    CHECK(truncated.entries[1].provider == "provider-1");

    req.max_results = 50;
    CHECK(processor.execute(req).entries.size() == 5);
}

TEST_CASE("targets restrict retrieval and unknown targets fault") {
    Repository repo;
    auto web = make_ad("broker-a", "a.wsdl", "BookFlight", "acme", ServiceType::WebService,
                       "book flight");
    auto p2p = make_ad("broker-b", "b.json", "bookFlight", "peerfly", ServiceType::P2PService,
                       "book flight");
    repo.upsert_broker_batch("broker-a", {web});
    repo.upsert_broker_batch("broker-b", {p2p});
    repo.upsert_broker_batch("broker-empty", {});

    QueryProcessor processor(repo, shared_registry(), fixed_clock());
    USQLRequest req = single_cap_request("book flight");

    req.targets = {"broker-a"};
    CHECK(entry_ids(processor.execute(req)) == std::vector<std::string>{web.id});

    req.targets = {"broker-a", "broker-empty"};
    CHECK(entry_ids(processor.execute(req)) == std::vector<std::string>{web.id});

    // a broker that has been crawled to emptiness is a valid, empty target
    req.targets = {"broker-empty"};
    CHECK(processor.execute(req).entries.empty());

    req.targets = {"broker-a", "ghost"};
    CHECK_THROWS_AS(processor.execute(req), UnknownTarget);
    CHECK_THROWS_WITH(processor.execute(req), "unknown target broker 'ghost'");
}

TEST_CASE("vocabulary faults surface instead of returning empty results") {
    Repository repo;
    auto ad = make_ad("broker-a", "a.wsdl", "BookFlight", "acme", ServiceType::WebService,
                      "book flight");
    repo.upsert_broker_batch("broker-a", {ad});
    QueryProcessor processor(repo, shared_registry(), fixed_clock());

    SUBCASE("unknown filter name") {
        USQLRequest req = single_cap_request("book flight");
        req.filters.push_back({"colour", "blue"});
        CHECK_THROWS_AS(processor.execute(req), UnknownFilterName);
    }
    SUBCASE("unknown QoS name with candidates present") {
        USQLRequest req;
        req.requirements.push_back(qos_req("Latency", QoSOperator::LE, 100, "ms"));
        CHECK_THROWS_AS(processor.execute(req), UnknownQoSName);
    }
    SUBCASE("unknown QoS name even when retrieval would be empty") {
        Repository empty;
        QueryProcessor over_empty(empty, shared_registry(), fixed_clock());
        USQLRequest req;
        req.requirements.push_back(qos_req("Latency", QoSOperator::LE, 100, "ms"));
        CHECK_THROWS_AS(over_empty.execute(req), UnknownQoSName);
    }
    SUBCASE("invalid requests are schema faults") {
        USQLRequest req;  // no requirements
        CHECK_THROWS_AS(processor.execute(req), SchemaError);
    }
}

TEST_CASE("filters are conjunctive hard gates; requirements only grade") {
    Repository repo;
    auto acme_web = make_ad("broker-a", "a.wsdl", "BookFlight", "acme",
                            ServiceType::WebService, "book flight");
    auto acme_p2p = make_ad("broker-a", "a.json", "bookFlight", "acme",
                            ServiceType::P2PService, "book flight");
    auto other_web = make_ad("broker-a", "o.wsdl", "BookFlight", "other",
                             ServiceType::WebService, "book flight");
    repo.upsert_broker_batch("broker-a", {acme_web, acme_p2p, other_web});
    QueryProcessor processor(repo, shared_registry(), fixed_clock());

    USQLRequest req = single_cap_request("book flight");
    req.filters.push_back({"provider", "acme"});
    req.filters.push_back({"serviceType", "WebService"});
    // other_web matches the query perfectly but fails the provider filter
    CHECK(entry_ids(processor.execute(req)) == std::vector<std::string>{acme_web.id});

    // an unmatched requirement lowers the degree but filters nothing out
    USQLRequest graded = single_cap_request("book flight");
    ServiceRequirement missing_input;
    missing_input.kind = RequirementKind::InputElement;
    missing_input.description = "passport number";
    graded.requirements.push_back(missing_input);
    graded.min_degree_of_match = 0.5;
    auto response = processor.execute(graded);
    REQUIRE(response.entries.size() == 3);
    for (const auto& entry : response.entries) {
        CHECK(entry.degree_of_match == 0.5);
        REQUIRE(entry.criterion_scores.size() == 2);
        CHECK(entry.criterion_scores[0].score == 1.0);
        CHECK(entry.criterion_scores[1].score == 0.0);
    }
}

TEST_CASE("one response can mix web, p2p and grid services") {
    Repository repo;
    auto web = make_ad("broker-a", "w.wsdl", "LocateResponder", "webco",
                       ServiceType::WebService, "locate nearest responder");
    auto p2p = make_ad("broker-b", "p.json", "locateResponder", "peerco",
                       ServiceType::P2PService, "locate nearest responder");
    p2p.invocation.entries = {{"pipe", "urn:jxta:uuid-1234"}, {"operation", "locateResponder"}};
    auto grid = make_ad("broker-c", "g.grid", "locateResponder", "gridco",
                        ServiceType::GridService, "locate nearest responder");
    grid.invocation.entries = {{"factory", "https://grid.example/LocatorFactory"}};
    repo.upsert_broker_batch("broker-a", {web});
    repo.upsert_broker_batch("broker-b", {p2p});
    repo.upsert_broker_batch("broker-c", {grid});

    QueryProcessor processor(repo, shared_registry(), fixed_clock());
    auto response = processor.execute(single_cap_request("locate nearest responder"));

    REQUIRE(response.entries.size() == 3);
    std::set<ServiceType> types;
    for (const auto& entry : response.entries) {
        CHECK(entry.degree_of_match == 1.0);
        types.insert(entry.service_type);
        CHECK(!entry.invocation.entries.empty());
    }
    CHECK(types.size() == 3);
}

TEST_CASE("identical request and repository state give byte-identical responses") {
    gen::Rng rng(20240815);
    Repository repo;
    std::vector<std::string> brokers{"broker-a", "broker-b"};
    auto corpus = seed_corpus(repo, rng, brokers, 25);
    auto clock = fixed_clock();
    QueryProcessor processor(repo, shared_registry(), clock);

    USQLRequest req = corpus_request(rng, corpus, brokers);
    req.request_id.clear();

    auto first = processor.execute(req);
    auto second = processor.execute(req);
    CHECK(model::serialize_response(first) == model::serialize_response(second));
    CHECK(first.generated_at == 1723900000);

    // without an id the response carries the canonical-request hash
    REQUIRE(first.request_id.size() == 16);
    for (char c : first.request_id) {
        CHECK((std::isdigit(static_cast<unsigned char>(c)) || (c >= 'a' && c <= 'f')));
    }
    CHECK(first.request_id == queryproc::derived_request_id(req));

    // the derived id depends on canonical content, not on the journey taken:
    // a reparse of the serialized form lands on the same id
    auto reparsed = model::parse_request(model::serialize_request(req)).request;
    CHECK(queryproc::derived_request_id(reparsed) == first.request_id);

    // a supplied id is echoed untouched
    req.request_id = "caller-chose-this";
    CHECK(processor.execute(req).request_id == "caller-chose-this");
}

TEST_CASE("the full pipeline agrees with a brute-force reference implementation") {
    gen::Rng rng(74550911);
    Repository repo;
    std::vector<std::string> brokers{"broker-a", "broker-b", "broker-c", "broker-d"};
    auto corpus = seed_corpus(repo, rng, brokers, 50);
    REQUIRE(corpus.size() == 200);
    QueryProcessor processor(repo, shared_registry(), fixed_clock());

    std::size_t nonempty_responses = 0;
    for (int round = 0; round < 60; ++round) {
        CAPTURE(round);
        USQLRequest req = corpus_request(rng, corpus, brokers);
        auto response = processor.execute(req);
        auto expected = ref_execute(corpus, req);

        REQUIRE(response.entries.size() == expected.size());
        if (!expected.empty()) ++nonempty_responses;
        for (std::size_t i = 0; i < expected.size(); ++i) {
            CAPTURE(i);
            const auto& got = response.entries[i];
            const auto& want = expected[i];
            CHECK(got.advertisement_id == want.id);
            CHECK(got.provider == want.provider);
            CHECK(got.name == want.name);
            CHECK(got.degree_of_match == doctest::Approx(want.degree).epsilon(1e-12));
            REQUIRE(got.criterion_scores.size() == req.requirements.size());
            for (std::size_t j = 0; j < want.scores.size(); ++j) {
                CHECK(got.criterion_scores[j].requirement_index == j);
                CHECK(got.criterion_scores[j].score == want.scores[j]);
            }
            if (i > 0) {
                CHECK(response.entries[i - 1].degree_of_match >= got.degree_of_match);
            }
        }
        CHECK(response.request_id == req.request_id);
    }
    // the generator must actually exercise the pipeline, not shoot blanks
    CHECK(nonempty_responses > 20);
}

TEST_CASE("explain breaks a match down per requirement and recomposes to the degree") {
    Repository repo;
    auto ad = make_ad("broker-a", "flights.wsdl", "BookFlight", "acme-travel",
                      ServiceType::WebService, "book international flight");
    ad.capability.ontology_reference = "urn:concepts:flight-booking";
    AdvertisedProperty input;
    input.kind = RequirementKind::InputElement;
    input.name = "departureCity";
    input.description = "departure city";
    input.data_type = DataTypeRef{kXsd, "long"};
    ad.inputs.push_back(input);
    ad.qos_properties.push_back(qos_property("ResponseTime", 800, "ms"));
    repo.upsert_broker_batch("broker-a", {ad});
    QueryProcessor processor(repo, shared_registry(), fixed_clock());

    USQLRequest req;
    ServiceRequirement cap = cap_req("book international flight", 2.0);
    cap.ontology_reference = "urn:concepts:flight-booking";
    req.requirements.push_back(cap);
    ServiceRequirement in;
    in.kind = RequirementKind::InputElement;
    in.description = "departure city";
    in.data_type = DataTypeRef{kXsd, "int"};  // widens to the advertised long
    in.weight = 1.0;
    req.requirements.push_back(in);
    req.requirements.push_back(qos_req("ResponseTime", QoSOperator::LE, 1, "s", 3.0));
    ServiceRequirement unpaired;
    unpaired.kind = RequirementKind::ResourceProperty;
    unpaired.description = "cpu count";
    unpaired.weight = 1.0;
    req.requirements.push_back(unpaired);

    auto explanation = processor.explain(req, ad.id);
    CHECK(explanation.advertisement_id == ad.id);
    REQUIRE(explanation.pairs.size() == 4);

    const auto& cap_pair = explanation.pairs[0];
    CHECK(cap_pair.requirement_index == 0);
    CHECK(cap_pair.matcher == "token-cosine/taxonomy-path");
    CHECK(cap_pair.group_weight == 2.0);
    REQUIRE(cap_pair.property.has_value());
    CHECK(cap_pair.text_arm == 1.0);
    CHECK(cap_pair.ontology_arm == 1.0);
    CHECK(!cap_pair.datatype_arm.has_value());  // capabilities have no type arm
    CHECK(cap_pair.score == 1.0);

    const auto& input_pair = explanation.pairs[1];
    REQUIRE(input_pair.property.has_value());
    CHECK(input_pair.property->name == "departureCity");
    CHECK(input_pair.text_arm == 1.0);
    CHECK(input_pair.ontology_arm == 0.0);
    REQUIRE(input_pair.datatype_arm.has_value());
    CHECK(*input_pair.datatype_arm == 0.8);
    CHECK(input_pair.score == 0.5 * (1.0 + 0.8));

    const auto& qos_pair = explanation.pairs[2];
    CHECK(qos_pair.matcher == "ResponseTime");
    CHECK(!qos_pair.text_arm.has_value());
    CHECK(!qos_pair.ontology_arm.has_value());
    CHECK(!qos_pair.datatype_arm.has_value());
    CHECK(qos_pair.score == 1.0);  // 800ms <= 1s

    const auto& unpaired_pair = explanation.pairs[3];
    CHECK(!unpaired_pair.property.has_value());
    CHECK(unpaired_pair.score == 0.0);

    // the breakdown recomposes to the reported degree, and the reported
    // degree is exactly what execute() ranks the advertisement by
    CHECK(recompose_degree(explanation) == doctest::Approx(explanation.degree).epsilon(1e-9));
    USQLRequest fetch = req;
    fetch.min_degree_of_match = 0.0;
    auto response = processor.execute(fetch);
    REQUIRE(response.entries.size() == 1);
    CHECK(response.entries[0].degree_of_match == explanation.degree);

    CHECK_THROWS_AS(processor.explain(req, "no-such-id"), NotFound);
    CHECK_THROWS_WITH(processor.explain(req, "no-such-id"),
                      "advertisement 'no-such-id' not found");
}

TEST_CASE("explain arm scores recombine into the pair score across random inputs") {
    gen::Rng rng(405060);
    Repository repo;
    std::vector<ServiceAdvertisement> batch;
    std::set<std::string> seen;
    while (batch.size() < 100) {
        ServiceAdvertisement ad = gen::advertisement(rng);
        ad.source_broker_id = "broker-x";
        ad.id = model::advertisement_id("broker-x", gen::identifier(rng, "doc"),
                                        ad.operation_name);
        if (seen.insert(ad.id).second) batch.push_back(std::move(ad));
    }
    repo.upsert_broker_batch("broker-x", batch);
    QueryProcessor processor(repo, shared_registry(), fixed_clock());

    for (int round = 0; round < 100; ++round) {
        CAPTURE(round);
        const ServiceAdvertisement& ad = batch[gen::pick_index(rng, batch.size())];
        USQLRequest req;
        std::size_t requirement_count = 1 + rng() % 4;
        for (std::size_t i = 0; i < requirement_count; ++i) {
            req.requirements.push_back(gen::requirement(rng, gen::requirement_kind(rng)));
        }

        auto explanation = processor.explain(req, ad.id);
        REQUIRE(explanation.pairs.size() == req.requirements.size());
        for (const auto& pair : explanation.pairs) {
            if (pair.requirement.kind == RequirementKind::QoS) {
                CHECK(pair.matcher == *pair.requirement.qos_name);
                CHECK(!pair.text_arm.has_value());
                continue;
            }
            if (!pair.property) {
                CHECK(pair.score == 0.0);
                CHECK(!pair.text_arm.has_value());
                continue;
            }
            REQUIRE(pair.text_arm.has_value());
            REQUIRE(pair.ontology_arm.has_value());
            double described = std::max(*pair.text_arm, *pair.ontology_arm);
            if (pair.requirement.kind == RequirementKind::Capability) {
                CHECK(!pair.datatype_arm.has_value());
                CHECK(pair.score == described);
            } else {
                REQUIRE(pair.datatype_arm.has_value());
                CHECK(pair.score == 0.5 * (described + *pair.datatype_arm));
            }
        }
        CHECK(recompose_degree(explanation) ==
              doctest::Approx(explanation.degree).epsilon(1e-9));

        // the explanation's degree is the one execute() ranks by
        USQLRequest fetch = req;
        fetch.min_degree_of_match = 0.0;
        fetch.max_results = 1000;
        auto response = processor.execute(fetch);
        bool found = false;
        for (const auto& entry : response.entries) {
            if (entry.advertisement_id == ad.id) {
                CHECK(entry.degree_of_match == explanation.degree);
                found = true;
            }
        }
        CHECK(found);
    }
}

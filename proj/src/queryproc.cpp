#include "proteus/queryproc.hpp"

#include <algorithm>
#include <cstdio>

#include "proteus/algebra.hpp"
#include "proteus/errors.hpp"
#include "proteus/usql_xml.hpp"

namespace proteus::queryproc {

namespace {

double clamp01(double value) { return std::min(1.0, std::max(0.0, value)); }

bool entry_before(const model::MatchedServiceEntry& a, const model::MatchedServiceEntry& b) {
    if (a.degree_of_match != b.degree_of_match) return a.degree_of_match > b.degree_of_match;
    if (a.provider != b.provider) return a.provider < b.provider;
    if (a.name != b.name) return a.name < b.name;
    return a.advertisement_id < b.advertisement_id;
}

}  // namespace

std::string derived_request_id(const model::USQLRequest& request) {
    const std::string canonical = model::serialize_request(request);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(model::fnv1a64(canonical)));
    return buf;
}

model::USQLResponse QueryProcessor::execute(const model::USQLRequest& request) const {
    model::validate_request(request);
    for (const auto& target : request.targets) {
        if (!repository_.has_broker(target)) {
            throw UnknownTarget("unknown target broker '" + target + "'");
        }
    }

    const algebra::MatcherSuite suite = plugins::make_matcher_suite(registry_, selection_);
    // A QoS requirement naming an unregistered matcher is a configuration
    // fault even when retrieval comes back empty; check up front so it can
    // never masquerade as a no-results response.
    for (const auto& requirement : request.requirements) {
        if (requirement.kind == model::RequirementKind::QoS &&
            suite.qos.count(*requirement.qos_name) == 0) {
            throw UnknownQoSName("no QoS matcher registered for '" + *requirement.qos_name +
                                 "'");
        }
    }
    const auto candidates = repository_.retrieve(request.filters, request.targets);

    std::vector<model::MatchedServiceEntry> entries;
    for (const auto& ad : candidates) {
        auto pairs = algebra::pair_requirements(request, ad, suite);
        auto scored = algebra::degree_of_match(algebra::partition_by_weight(std::move(pairs)),
                                               suite);
        if (scored.degree < request.min_degree_of_match) continue;

        model::MatchedServiceEntry entry;
        entry.degree_of_match = scored.degree;
        entry.provider = ad.provider;
        entry.name = ad.operation_name;
        entry.description = ad.capability.description.value_or("");
        entry.service_type = ad.service_type;
        entry.criterion_scores = std::move(scored.criterion_scores);
        entry.invocation = ad.invocation;
        entry.advertisement_id = ad.id;
        entries.push_back(std::move(entry));
    }

    std::sort(entries.begin(), entries.end(), entry_before);
    if (entries.size() > request.max_results) {
        entries.resize(request.max_results);
    }

    model::USQLResponse response;
    response.request_id =
        request.request_id.empty() ? derived_request_id(request) : request.request_id;
    response.entries = std::move(entries);
    response.generated_at = clock_->now_epoch_seconds();
    model::validate_response(response);
    return response;
}

Explanation QueryProcessor::explain(const model::USQLRequest& request,
                                    const std::string& advertisement_id) const {
    model::validate_request(request);
    const auto ad = repository_.find(advertisement_id);
    if (!ad) {
        throw NotFound("advertisement '" + advertisement_id + "' not found");
    }

    const algebra::MatcherSuite suite = plugins::make_matcher_suite(registry_, selection_);
    auto pairs = algebra::pair_requirements(request, *ad, suite);

    Explanation explanation;
    explanation.advertisement_id = advertisement_id;
    for (const auto& pair : pairs) {
        PairBreakdown breakdown;
        breakdown.requirement_index = pair.requirement_index;
        breakdown.requirement = pair.requirement;
        breakdown.property = pair.property;
        breakdown.group_weight = pair.requirement.weight;

        const model::AdvertisedProperty* property =
            pair.property ? &*pair.property : nullptr;
        breakdown.score = algebra::match_pair(pair.requirement, property, suite);

        const auto& r = pair.requirement;
        if (r.kind == model::RequirementKind::QoS) {
            breakdown.matcher = r.qos_name.value_or("");
        } else {
            breakdown.matcher = selection_.text + "/" + selection_.ontology;
            if (property) {
                // Arm scores mirror the pair-score combination rules; the
                // breakdown must recompose to the same numbers.
                breakdown.text_arm =
                    (r.description && property->description)
                        ? clamp01(suite.text(*r.description, *property->description))
                        : 0.0;
                breakdown.ontology_arm =
                    (r.ontology_reference && property->ontology_reference)
                        ? clamp01(suite.ontology(*r.ontology_reference,
                                                 *property->ontology_reference))
                        : 0.0;
                if (r.kind != model::RequirementKind::Capability) {
                    breakdown.datatype_arm =
                        (r.data_type && property->data_type)
                            ? clamp01(suite.datatype(*r.data_type, *property->data_type))
                            : 0.0;
                }
            }
        }
        explanation.pairs.push_back(std::move(breakdown));
    }

    explanation.degree =
        algebra::degree_of_match(algebra::partition_by_weight(std::move(pairs)), suite).degree;
    return explanation;
}

}  // namespace proteus::queryproc

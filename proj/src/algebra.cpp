#include "proteus/algebra.hpp"

#include <algorithm>
#include <cmath>

#include "proteus/errors.hpp"

namespace proteus::algebra {

namespace {

double clamp01(double x) {
    return std::clamp(x, 0.0, 1.0);
}

}  // namespace

WeightGroupPartition partition_by_weight(std::vector<RequirementPair> pairs) {
    if (pairs.empty()) {
        throw EmptyRequirements("cannot partition an empty requirement set");
    }
    // std::map keeps the distinct weights ascending; push_back keeps the
    // original request order inside each group.
    std::map<double, std::vector<RequirementPair>> by_weight;
    for (RequirementPair& pair : pairs) {
        double w = pair.requirement.weight;
        if (!(w > 0.0)) {
            throw NonPositiveWeight("requirement " + std::to_string(pair.requirement_index) +
                                    " has non-positive weight " + std::to_string(w));
        }
        by_weight[w].push_back(std::move(pair));
    }
    WeightGroupPartition partition;
    partition.groups.reserve(by_weight.size());
    for (auto& [weight, group_pairs] : by_weight) {
        partition.groups.push_back(WeightGroup{weight, std::move(group_pairs)});
    }
    return partition;
}

double match_described(const ServiceRequirement& r, const AdvertisedProperty& p,
                       const MatcherSuite& suite) {
    double text_arm = 0.0;
    if (r.description && p.description) {
        text_arm = clamp01(suite.text(*r.description, *p.description));
    }
    double ontology_arm = 0.0;
    if (r.ontology_reference && p.ontology_reference) {
        ontology_arm = clamp01(suite.ontology(*r.ontology_reference, *p.ontology_reference));
    }
    return std::max(text_arm, ontology_arm);
}

double match_described_typed(const ServiceRequirement& r, const AdvertisedProperty& p,
                             const MatcherSuite& suite) {
    double type_arm = 0.0;
    if (r.data_type && p.data_type) {
        type_arm = clamp01(suite.datatype(*r.data_type, *p.data_type));
    }
    return 0.5 * (match_described(r, p, suite) + type_arm);
}

double match_capability(const ServiceRequirement& r, const AdvertisedProperty& p,
                        const MatcherSuite& suite) {
    return match_described(r, p, suite);
}

double match_pair(const ServiceRequirement& r, const AdvertisedProperty* p,
                  const MatcherSuite& suite) {
    if (r.kind == model::RequirementKind::QoS) {
        const std::string& name = r.qos_name ? *r.qos_name : std::string();
        auto it = suite.qos.find(name);
        if (it == suite.qos.end()) {
            throw UnknownQoSName("no QoS matcher registered for '" + name + "'");
        }
        if (!p) return 0.0;
        return clamp01(it->second(r, *p));
    }
    if (!p) return 0.0;
    if (r.kind == model::RequirementKind::Capability) {
        return match_capability(r, *p, suite);
    }
    return match_described_typed(r, *p, suite);
}

DegreeResult degree_of_match(const WeightGroupPartition& partition, const MatcherSuite& suite) {
    const std::size_t k = partition.groups.size();
    DegreeResult result;
    if (k == 0) {
        throw EmptyRequirements("cannot score an empty partition");
    }

    std::vector<double> means(k, 0.0);
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const WeightGroup& group = partition.groups[j];
        weight_sum += group.weight;
        double score_sum = 0.0;
        for (const RequirementPair& pair : group.pairs) {
            double score =
                match_pair(pair.requirement, pair.property ? &*pair.property : nullptr, suite);
            score_sum += score;
            result.criterion_scores.push_back({pair.requirement_index, score});
        }
        means[j] = score_sum / static_cast<double>(group.pairs.size());
    }

    // Suffix products: product[i] = m_i * m_{i+1} * ... * m_k.
    std::vector<double> product(k, 0.0);
    product[k - 1] = means[k - 1];
    for (std::size_t j = k - 1; j-- > 0;) {
        product[j] = means[j] * product[j + 1];
    }

    double d = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        d += (partition.groups[i].weight / weight_sum) * product[i];
    }
    result.degree = clamp01(d);

    std::sort(result.criterion_scores.begin(), result.criterion_scores.end(),
              [](const model::CriterionScore& a, const model::CriterionScore& b) {
                  return a.requirement_index < b.requirement_index;
              });
    return result;
}

std::vector<RequirementPair> pair_requirements(const model::USQLRequest& request,
                                               const model::ServiceAdvertisement& advertisement,
                                               const MatcherSuite& suite) {
    using model::RequirementKind;
    std::vector<RequirementPair> pairs;
    pairs.reserve(request.requirements.size());
    for (std::size_t i = 0; i < request.requirements.size(); ++i) {
        const ServiceRequirement& r = request.requirements[i];
        RequirementPair pair{i, r, std::nullopt};
        switch (r.kind) {
            case RequirementKind::Capability:
                pair.property = advertisement.capability;
                break;
            case RequirementKind::QoS:
                for (const AdvertisedProperty& p : advertisement.qos_properties) {
                    if (p.qos_name == r.qos_name) {
                        pair.property = p;
                        break;
                    }
                }
                break;
            default: {
                const std::vector<AdvertisedProperty>* candidates = nullptr;
                if (r.kind == RequirementKind::InputElement) {
                    candidates = &advertisement.inputs;
                } else if (r.kind == RequirementKind::OutputElement) {
                    candidates = &advertisement.outputs;
                } else {
                    candidates = &advertisement.resource_properties;
                }
                const AdvertisedProperty* best = nullptr;
                double best_score = 0.0;
                for (const AdvertisedProperty& candidate : *candidates) {
                    double score = match_pair(r, &candidate, suite);
                    if (!best || score > best_score) {
                        best = &candidate;
                        best_score = score;
                    }
                }
                if (best) pair.property = *best;
                break;
            }
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace proteus::algebra

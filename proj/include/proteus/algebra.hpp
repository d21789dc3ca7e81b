#pragma once

// The matchmaking algebra: weight partitioning, the description/type matcher
// functions and the degree-of-match calculator.  Everything here is a pure
// function over immutable inputs; the value matchers (text, ontology,
// datatype, QoS) are injected through a MatcherSuite so the algebra stays
// independent of how those scores are produced.

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proteus/model.hpp"

namespace proteus::algebra {

using model::AdvertisedProperty;
using model::ServiceRequirement;

using TextMatcherFn = std::function<double(const std::string&, const std::string&)>;
using OntologyMatcherFn = std::function<double(const std::string&, const std::string&)>;
using DatatypeMatcherFn =
    std::function<double(const model::DataTypeRef&, const model::DataTypeRef&)>;
using QoSMatcherFn =
    std::function<double(const ServiceRequirement&, const AdvertisedProperty&)>;

// The pluggable value matchers. All functions must be total on valid inputs
// and safe for concurrent invocation; outputs are clamped to [0,1] here
// regardless. `qos` is keyed by QoS property name (e.g. "ResponseTime").
struct MatcherSuite {
    TextMatcherFn text;
    OntologyMatcherFn ontology;
    DatatypeMatcherFn datatype;
    std::map<std::string, QoSMatcherFn> qos;
};

// One requirement with the advertised property chosen for it (absent when
// the advertisement has nothing of the matching kind/name).
struct RequirementPair {
    std::size_t requirement_index = 0;  // position in the original request
    ServiceRequirement requirement;
    std::optional<AdvertisedProperty> property;
};

// Pairs sharing one weight value, in original request order.
struct WeightGroup {
    double weight = 0.0;
    std::vector<RequirementPair> pairs;
};

// Groups in strictly ascending weight order; the last group is the
// top-priority one. Every source requirement appears in exactly one group.
struct WeightGroupPartition {
    std::vector<WeightGroup> groups;
};

struct DegreeResult {
    double degree = 0.0;
    // one entry per requirement, ordered by requirement index
    std::vector<model::CriterionScore> criterion_scores;
};

// Groups pairs by distinct weight value. Throws EmptyRequirements on an
// empty input and NonPositiveWeight when any weight is <= 0.
WeightGroupPartition partition_by_weight(std::vector<RequirementPair> pairs);

// Score of a described requirement against a described property:
// max of the text arm and the ontology arm. A side missing its description
// (resp. ontology reference) zeroes that arm.
double match_described(const ServiceRequirement& r, const AdvertisedProperty& p,
                       const MatcherSuite& suite);

// Score of a described-and-typed requirement: the mean of match_described
// and the datatype arm. A missing dataType on either side zeroes the type
// arm, so an untyped element requirement can score at most 0.5 (documented
// scoring quirk; the formula is implemented literally).
double match_described_typed(const ServiceRequirement& r, const AdvertisedProperty& p,
                             const MatcherSuite& suite);

// Capability requirements are matched purely on their description arms.
double match_capability(const ServiceRequirement& r, const AdvertisedProperty& p,
                        const MatcherSuite& suite);

// Kind dispatch: Capability -> match_capability, element kinds ->
// match_described_typed, QoS -> the suite matcher registered under the
// requirement's qosName. An absent property scores 0. Throws UnknownQoSName
// when no matcher is registered for a QoS requirement's name, even if the
// property is absent: that is a configuration fault, not a zero score.
double match_pair(const ServiceRequirement& r, const AdvertisedProperty* p,
                  const MatcherSuite& suite);

// The calculator: with groups 1..k ascending by weight, normalized weights
// w'_i = w_i / sum(w), and m_j = the plain arithmetic mean of pair scores in
// group j,
//
//   d = sum_{i=1..k} w'_i * prod_{j=i..k} m_j
//
// so every term contains the top-priority mean m_k: a service failing the
// top-weighted requirements entirely is vetoed to 0. Returns d clamped to
// [0,1] plus the individual pair scores for response criterion reporting.
DegreeResult degree_of_match(const WeightGroupPartition& partition, const MatcherSuite& suite);

// Chooses an advertised property for every requirement of the request:
// Capability takes the advertisement's capability, QoS takes the QoS
// property with the same name (absent otherwise), and element kinds take
// the candidate from the corresponding advertisement list that maximizes
// match_pair (first maximal candidate in advertisement order on ties; two
// requirements may select the same candidate).
std::vector<RequirementPair> pair_requirements(const model::USQLRequest& request,
                                               const model::ServiceAdvertisement& advertisement,
                                               const MatcherSuite& suite);

}  // namespace proteus::algebra

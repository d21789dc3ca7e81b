#pragma once

// End-to-end query execution: hard-filter retrieval from the repository,
// requirement pairing, algebra scoring, thresholding, ranking, and response
// assembly. Also the per-advertisement scoring breakdown behind --explain.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "proteus/clock.hpp"
#include "proteus/model.hpp"
#include "proteus/plugins.hpp"
#include "proteus/repository.hpp"

namespace proteus::queryproc {

// How one requirement scored against the property paired with it. The arm
// fields are set where the requirement kind defines them: text/ontology for
// every described kind, datatype additionally for element kinds, none for
// QoS (whose score is the binary constraint check itself). An empty
// `property` marks an unpaired requirement; its score is 0 by rule.
struct PairBreakdown {
    std::size_t requirement_index = 0;
    model::ServiceRequirement requirement;
    std::optional<model::AdvertisedProperty> property;
    std::string matcher;  // matcher keys consulted, e.g. "token-cosine/taxonomy-path"
    double group_weight = 0.0;
    double score = 0.0;
    std::optional<double> text_arm;
    std::optional<double> ontology_arm;
    std::optional<double> datatype_arm;
};

struct Explanation {
    std::string advertisement_id;
    std::vector<PairBreakdown> pairs;  // ordered by requirement index
    double degree = 0.0;
};

// Stateless over the injected collaborators; safe for concurrent execute()
// calls under the repository's reader contract.
class QueryProcessor {
public:
    QueryProcessor(const repository::Repository& repository, const plugins::Registry& registry,
                   std::shared_ptr<const Clock> clock, plugins::MatcherSelection selection = {})
        : repository_(repository), registry_(registry), clock_(std::move(clock)),
          selection_(std::move(selection)) {}

    // Pipeline: validate -> resolve targets -> retrieve(filters, targets) ->
    // score every candidate -> keep degree >= minDegreeOfMatch -> sort by
    // (degree desc, provider, name, advertisementId) -> truncate to
    // maxResults. Throws SchemaError (invalid request), UnknownTarget,
    // UnknownFilterName, PluginNotFound and UnknownQoSName; the calling face
    // turns these into query fault documents.
    model::USQLResponse execute(const model::USQLRequest& request) const;

    // Scoring breakdown of `request` against one stored advertisement.
    // Throws NotFound when the advertisement does not exist.
    Explanation explain(const model::USQLRequest& request,
                        const std::string& advertisement_id) const;

private:
    const repository::Repository& repository_;
    const plugins::Registry& registry_;
    std::shared_ptr<const Clock> clock_;
    plugins::MatcherSelection selection_;
};

// Request id echoed into responses when the request carries none: a stable
// hash of the canonical request document, so identical queries always get
// the same id.
std::string derived_request_id(const model::USQLRequest& request);

}  // namespace proteus::queryproc

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace proteus::model {

enum class RequirementKind { Capability, InputElement, OutputElement, ResourceProperty, QoS };
enum class ServiceType { WebService, P2PService, GridService };
enum class QoSOperator { LE, GE, EQ };

std::string_view to_string(RequirementKind kind);
std::string_view to_string(ServiceType type);
std::string_view to_string(QoSOperator op);

// All three throw SchemaError on unknown names.
RequirementKind requirement_kind_from_string(std::string_view name);
ServiceType service_type_from_string(std::string_view name);
QoSOperator qos_operator_from_string(std::string_view name);

struct DataTypeRef {
    std::string namespace_uri;
    std::string local_name;

    bool operator==(const DataTypeRef&) const = default;
};

struct QoSValue {
    double value = 0.0;
    std::string unit;  // empty means dimensionless

    bool operator==(const QoSValue&) const = default;
};

// One weighted search criterion. Non-QoS kinds need a description and/or an
// ontology reference; QoS kinds need name, operator and value.
struct ServiceRequirement {
    RequirementKind kind = RequirementKind::Capability;
    std::optional<std::string> description;
    std::optional<std::string> ontology_reference;
    std::optional<DataTypeRef> data_type;
    std::optional<std::string> qos_name;
    std::optional<QoSOperator> qos_operator;
    std::optional<QoSValue> qos_value;
    double weight = 1.0;

    bool operator==(const ServiceRequirement&) const = default;
};

struct SearchFilter {
    std::string name;
    std::string value;

    bool operator==(const SearchFilter&) const = default;
};

struct BrokerDescriptor {
    std::string id;
    std::string broker_type;
    std::map<std::string, std::string> access_details;
    std::uint32_t crawl_interval_seconds = 300;

    bool operator==(const BrokerDescriptor&) const = default;
};

struct USQLRequest {
    std::string request_id;  // optional; echoed into the response when set
    std::vector<std::string> targets;
    std::vector<SearchFilter> filters;
    std::vector<ServiceRequirement> requirements;
    double min_degree_of_match = 0.5;
    std::uint32_t max_results = 50;

    bool operator==(const USQLRequest&) const = default;
};

struct AdvertisedProperty {
    RequirementKind kind = RequirementKind::Capability;
    std::string name;
    std::optional<std::string> description;
    std::optional<std::string> ontology_reference;
    std::optional<DataTypeRef> data_type;
    std::optional<std::string> qos_name;
    std::optional<QoSValue> qos_value;

    bool operator==(const AdvertisedProperty&) const = default;
};

struct InvocationDetails {
    ServiceType service_type = ServiceType::WebService;
    std::map<std::string, std::string> entries;

    bool operator==(const InvocationDetails&) const = default;
};

struct ServiceAdvertisement {
    std::string id;
    ServiceType service_type = ServiceType::WebService;
    std::string provider;
    std::string operation_name;
    AdvertisedProperty capability;
    std::vector<AdvertisedProperty> inputs;
    std::vector<AdvertisedProperty> outputs;
    std::vector<AdvertisedProperty> resource_properties;
    std::vector<AdvertisedProperty> qos_properties;
    std::map<std::string, std::string> filter_attributes;
    InvocationDetails invocation;
    std::string source_broker_id;
    std::int64_t harvested_at = 0;

    bool operator==(const ServiceAdvertisement&) const = default;
};

struct CriterionScore {
    std::size_t requirement_index = 0;
    double score = 0.0;

    bool operator==(const CriterionScore&) const = default;
};

struct MatchedServiceEntry {
    double degree_of_match = 0.0;
    std::string provider;
    std::string name;
    std::string description;
    ServiceType service_type = ServiceType::WebService;
    std::vector<CriterionScore> criterion_scores;
    InvocationDetails invocation;
    std::string advertisement_id;

    bool operator==(const MatchedServiceEntry&) const = default;
};

struct USQLResponse {
    std::string request_id;
    std::vector<MatchedServiceEntry> entries;  // degree descending
    std::int64_t generated_at = 0;

    bool operator==(const USQLResponse&) const = default;
};

// Hard-filter attribute names the engine accepts.
const std::set<std::string>& default_filter_vocabulary();

// Invariant checks; all throw SchemaError naming the offending element.
// `path` is the document location prefixed to messages, e.g.
// "/USQLRequest/Requirements/Capability".
void validate_requirement(const ServiceRequirement& requirement, const std::string& path);
void validate_request(const USQLRequest& request);
void validate_advertisement(const ServiceAdvertisement& advertisement);
void validate_response(const USQLResponse& response);

// FNV-1a over the identity triple; stable across runs and platforms.
std::string advertisement_id(std::string_view broker_id, std::string_view document_id,
                             std::string_view operation_name);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace proteus::model

#include "proteus/model.hpp"

#include <cstdio>

#include "proteus/errors.hpp"

namespace proteus::model {

std::string_view to_string(RequirementKind kind) {
    switch (kind) {
        case RequirementKind::Capability: return "Capability";
        case RequirementKind::InputElement: return "InputElement";
        case RequirementKind::OutputElement: return "OutputElement";
        case RequirementKind::ResourceProperty: return "ResourceProperty";
        case RequirementKind::QoS: return "QoS";
    }
    return "?";
}

std::string_view to_string(ServiceType type) {
    switch (type) {
        case ServiceType::WebService: return "WebService";
        case ServiceType::P2PService: return "P2PService";
        case ServiceType::GridService: return "GridService";
    }
    return "?";
}

std::string_view to_string(QoSOperator op) {
    switch (op) {
        case QoSOperator::LE: return "LE";
        case QoSOperator::GE: return "GE";
        case QoSOperator::EQ: return "EQ";
    }
    return "?";
}

RequirementKind requirement_kind_from_string(std::string_view name) {
    if (name == "Capability") return RequirementKind::Capability;
    if (name == "InputElement") return RequirementKind::InputElement;
    if (name == "OutputElement") return RequirementKind::OutputElement;
    if (name == "ResourceProperty") return RequirementKind::ResourceProperty;
    if (name == "QoS") return RequirementKind::QoS;
    throw SchemaError("unknown requirement kind '" + std::string(name) + "'");
}

ServiceType service_type_from_string(std::string_view name) {
    if (name == "WebService") return ServiceType::WebService;
    if (name == "P2PService") return ServiceType::P2PService;
    if (name == "GridService") return ServiceType::GridService;
    throw SchemaError("unknown serviceType '" + std::string(name) + "'");
}

QoSOperator qos_operator_from_string(std::string_view name) {
    if (name == "LE") return QoSOperator::LE;
    if (name == "GE") return QoSOperator::GE;
    if (name == "EQ") return QoSOperator::EQ;
    throw SchemaError("unknown QoS operator '" + std::string(name) + "'");
}

const std::set<std::string>& default_filter_vocabulary() {
    static const std::set<std::string> vocabulary = {
        "provider", "classification", "peerGroup", "virtualOrganization", "serviceType",
    };
    return vocabulary;
}

void validate_requirement(const ServiceRequirement& r, const std::string& path) {
    if (!(r.weight > 0.0)) {
        throw SchemaError(path + "/@weight: weight must be > 0");
    }
    if (r.kind == RequirementKind::QoS) {
        if (!r.qos_name || r.qos_name->empty()) {
            throw SchemaError(path + "/@name: QoS requirement needs a name");
        }
        if (!r.qos_operator) {
            throw SchemaError(path + "/@operator: QoS requirement needs an operator");
        }
        if (!r.qos_value) {
            throw SchemaError(path + "/@value: QoS requirement needs a value");
        }
    } else {
        bool described = (r.description && !r.description->empty()) ||
                         (r.ontology_reference && !r.ontology_reference->empty());
        if (!described) {
            throw SchemaError(path + ": requirement needs a description and/or an ontologyReference");
        }
        if (r.qos_name || r.qos_operator || r.qos_value) {
            throw SchemaError(path + ": QoS attributes are only valid on QoS requirements");
        }
        if (r.data_type && r.kind == RequirementKind::Capability) {
            throw SchemaError(path + "/DataType: capability requirements cannot be typed");
        }
    }
    if (r.data_type) {
        if (r.data_type->namespace_uri.empty()) {
            throw SchemaError(path + "/DataType/@namespace: must be non-empty");
        }
        if (r.data_type->local_name.empty()) {
            throw SchemaError(path + "/DataType/@localName: must be non-empty");
        }
    }
}

void validate_request(const USQLRequest& request) {
    if (request.requirements.empty()) {
        throw SchemaError("/USQLRequest/Requirements: at least one requirement is required");
    }
    if (request.min_degree_of_match < 0.0 || request.min_degree_of_match > 1.0) {
        throw SchemaError("/USQLRequest/@minDegreeOfMatch: must be within [0,1]");
    }
    if (request.max_results == 0) {
        throw SchemaError("/USQLRequest/@maxResults: must be positive");
    }
    for (std::size_t i = 0; i < request.requirements.size(); ++i) {
        const ServiceRequirement& r = request.requirements[i];
        std::string path = "/USQLRequest/Requirements/" + std::string(to_string(r.kind)) +
                           "[" + std::to_string(i) + "]";
        validate_requirement(r, path);
    }
    for (const SearchFilter& filter : request.filters) {
        if (filter.name.empty()) {
            throw SchemaError("/USQLRequest/Filters/Filter/@name: must be non-empty");
        }
        if (filter.value.empty()) {
            throw SchemaError("/USQLRequest/Filters/Filter[@name='" + filter.name +
                              "']/@value: must be non-empty");
        }
    }
    for (const std::string& target : request.targets) {
        if (target.empty()) {
            throw SchemaError("/USQLRequest/Targets/Target: must be non-empty");
        }
    }
}

namespace {

void validate_property(const AdvertisedProperty& p, const std::string& path) {
    if (p.kind == RequirementKind::QoS) {
        if (!p.qos_name || p.qos_name->empty()) {
            throw SchemaError(path + ": QoS property needs a qosName");
        }
        if (!p.qos_value) {
            throw SchemaError(path + ": QoS property needs a qosValue");
        }
    }
    if (p.data_type && (p.data_type->namespace_uri.empty() || p.data_type->local_name.empty())) {
        throw SchemaError(path + ": dataType parts must be non-empty");
    }
}

}  // namespace

void validate_advertisement(const ServiceAdvertisement& ad) {
    const std::string path = "advertisement '" + ad.id + "'";
    if (ad.id.empty()) throw SchemaError("advertisement id must be non-empty");
    if (ad.source_broker_id.empty()) throw SchemaError(path + ": sourceBrokerId must be non-empty");
    if (ad.capability.kind != RequirementKind::Capability) {
        throw SchemaError(path + ": capability property must have kind Capability");
    }
    validate_property(ad.capability, path + "/capability");
    for (const auto& p : ad.inputs)
        if (p.kind != RequirementKind::InputElement)
            throw SchemaError(path + "/inputs: wrong property kind");
    for (const auto& p : ad.outputs)
        if (p.kind != RequirementKind::OutputElement)
            throw SchemaError(path + "/outputs: wrong property kind");
    for (const auto& p : ad.resource_properties)
        if (p.kind != RequirementKind::ResourceProperty)
            throw SchemaError(path + "/resourceProperties: wrong property kind");
    for (const auto& p : ad.qos_properties) {
        if (p.kind != RequirementKind::QoS)
            throw SchemaError(path + "/qosProperties: wrong property kind");
        validate_property(p, path + "/qosProperties");
    }
    if (ad.invocation.entries.empty()) {
        throw SchemaError(path + ": invocation entries must be non-empty");
    }
    if (!ad.filter_attributes.count("provider") || !ad.filter_attributes.count("serviceType")) {
        throw SchemaError(path + ": filterAttributes must contain provider and serviceType");
    }
}

void validate_response(const USQLResponse& response) {
    for (std::size_t i = 0; i < response.entries.size(); ++i) {
        const MatchedServiceEntry& e = response.entries[i];
        if (e.degree_of_match < 0.0 || e.degree_of_match > 1.0) {
            throw SchemaError("entry " + std::to_string(i) + ": degreeOfMatch out of [0,1]");
        }
        if (e.invocation.entries.empty()) {
            throw SchemaError("entry " + std::to_string(i) + ": invocation entries must be non-empty");
        }
        if (i > 0 && response.entries[i - 1].degree_of_match < e.degree_of_match) {
            throw SchemaError("entries not sorted by degreeOfMatch at index " + std::to_string(i));
        }
    }
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::string advertisement_id(std::string_view broker_id, std::string_view document_id,
                             std::string_view operation_name) {
    std::string key;
    key.reserve(broker_id.size() + document_id.size() + operation_name.size() + 2);
    key.append(broker_id);
    key.push_back('\x1f');
    key.append(document_id);
    key.push_back('\x1f');
    key.append(operation_name);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(key)));
    return buf;
}

}  // namespace proteus::model

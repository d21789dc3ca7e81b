#include "proteus/advert_codec.hpp"

#include <json.hpp>

#include "proteus/errors.hpp"

namespace proteus::model {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json encode_property(const AdvertisedProperty& p) {
    ordered_json j = ordered_json::object();
    j["kind"] = std::string(to_string(p.kind));
    j["name"] = p.name;
    if (p.description) j["description"] = *p.description;
    if (p.ontology_reference) j["ontologyReference"] = *p.ontology_reference;
    if (p.data_type) {
        j["dataType"] = {{"namespace", p.data_type->namespace_uri},
                         {"localName", p.data_type->local_name}};
    }
    if (p.qos_name) j["qosName"] = *p.qos_name;
    if (p.qos_value) {
        j["qosValue"] = {{"value", p.qos_value->value}, {"unit", p.qos_value->unit}};
    }
    return j;
}

AdvertisedProperty decode_property(const ordered_json& j) {
    AdvertisedProperty p;
    p.kind = requirement_kind_from_string(j.at("kind").get<std::string>());
    p.name = j.at("name").get<std::string>();
    if (j.contains("description")) p.description = j["description"].get<std::string>();
    if (j.contains("ontologyReference")) {
        p.ontology_reference = j["ontologyReference"].get<std::string>();
    }
    if (j.contains("dataType")) {
        DataTypeRef ref;
        ref.namespace_uri = j["dataType"].at("namespace").get<std::string>();
        ref.local_name = j["dataType"].at("localName").get<std::string>();
        p.data_type = ref;
    }
    if (j.contains("qosName")) p.qos_name = j["qosName"].get<std::string>();
    if (j.contains("qosValue")) {
        QoSValue value;
        value.value = j["qosValue"].at("value").get<double>();
        value.unit = j["qosValue"].at("unit").get<std::string>();
        p.qos_value = value;
    }
    return p;
}

ordered_json encode_properties(const std::vector<AdvertisedProperty>& properties) {
    ordered_json arr = ordered_json::array();
    for (const AdvertisedProperty& p : properties) arr.push_back(encode_property(p));
    return arr;
}

std::vector<AdvertisedProperty> decode_properties(const ordered_json& arr) {
    std::vector<AdvertisedProperty> out;
    out.reserve(arr.size());
    for (const ordered_json& j : arr) out.push_back(decode_property(j));
    return out;
}

}  // namespace

std::string encode_advertisement(const ServiceAdvertisement& ad) {
    ordered_json j = ordered_json::object();
    j["id"] = ad.id;
    j["serviceType"] = std::string(to_string(ad.service_type));
    j["provider"] = ad.provider;
    j["operationName"] = ad.operation_name;
    j["capability"] = encode_property(ad.capability);
    j["inputs"] = encode_properties(ad.inputs);
    j["outputs"] = encode_properties(ad.outputs);
    j["resourceProperties"] = encode_properties(ad.resource_properties);
    j["qosProperties"] = encode_properties(ad.qos_properties);
    j["filterAttributes"] = ordered_json::object();
    for (const auto& [key, value] : ad.filter_attributes) j["filterAttributes"][key] = value;
    ordered_json invocation = ordered_json::object();
    invocation["serviceType"] = std::string(to_string(ad.invocation.service_type));
    invocation["entries"] = ordered_json::object();
    for (const auto& [key, value] : ad.invocation.entries) invocation["entries"][key] = value;
    j["invocation"] = invocation;
    j["sourceBrokerId"] = ad.source_broker_id;
    j["harvestedAt"] = ad.harvested_at;
    return j.dump();
}

ServiceAdvertisement decode_advertisement(std::string_view line, std::size_t line_number) {
    auto fail = [line_number](const std::string& why) -> DecodeError {
        std::string where = line_number ? "line " + std::to_string(line_number) + ": " : "";
        return DecodeError(where + why);
    };
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded()) throw fail("malformed JSON record");
    try {
        ServiceAdvertisement ad;
        ad.id = j.at("id").get<std::string>();
        ad.service_type = service_type_from_string(j.at("serviceType").get<std::string>());
        ad.provider = j.at("provider").get<std::string>();
        ad.operation_name = j.at("operationName").get<std::string>();
        ad.capability = decode_property(j.at("capability"));
        ad.inputs = decode_properties(j.at("inputs"));
        ad.outputs = decode_properties(j.at("outputs"));
        ad.resource_properties = decode_properties(j.at("resourceProperties"));
        ad.qos_properties = decode_properties(j.at("qosProperties"));
        for (const auto& [key, value] : j.at("filterAttributes").items()) {
            ad.filter_attributes[key] = value.get<std::string>();
        }
        const ordered_json& invocation = j.at("invocation");
        ad.invocation.service_type =
            service_type_from_string(invocation.at("serviceType").get<std::string>());
        for (const auto& [key, value] : invocation.at("entries").items()) {
            ad.invocation.entries[key] = value.get<std::string>();
        }
        ad.source_broker_id = j.at("sourceBrokerId").get<std::string>();
        ad.harvested_at = j.at("harvestedAt").get<std::int64_t>();
        validate_advertisement(ad);
        return ad;
    } catch (const ordered_json::exception& e) {
        throw fail(e.what());
    } catch (const SchemaError& e) {
        throw fail(e.what());
    }
}

}  // namespace proteus::model

#include "proteus/usql_xml.hpp"

#include <cstdio>
#include <cstdlib>
#include <initializer_list>
#include <string>

#include "proteus/clock.hpp"
#include "proteus/errors.hpp"
#include "proteus/xml.hpp"

namespace proteus::model {

namespace {

using xml::Element;

std::string format_uint(std::uint32_t value) {
    return std::to_string(value);
}

double parse_decimal(const std::string& raw, const std::string& path) {
    const char* begin = raw.c_str();
    char* end = nullptr;
    double value = std::strtod(begin, &end);
    if (end != begin + raw.size() || raw.empty()) {
        throw SchemaError(path + ": '" + raw + "' is not a decimal");
    }
    return value;
}

std::uint32_t parse_uint(const std::string& raw, const std::string& path) {
    const char* begin = raw.c_str();
    char* end = nullptr;
    unsigned long value = std::strtoul(begin, &end, 10);
    if (end != begin + raw.size() || raw.empty() || value > 0xFFFFFFFFul) {
        throw SchemaError(path + ": '" + raw + "' is not an unsigned integer");
    }
    return static_cast<std::uint32_t>(value);
}

class SchemaChecker {
public:
    SchemaChecker(ParseMode mode, std::vector<std::string>* warnings)
        : mode_(mode), warnings_(warnings) {}

    void unknown(const std::string& what, const std::string& path) const {
        std::string message = path + ": unknown " + what;
        if (mode_ == ParseMode::Strict) throw SchemaError(message);
        if (warnings_) warnings_->push_back(message);
    }

    void check_attributes(const Element& e, std::initializer_list<std::string_view> allowed,
                          const std::string& path) const {
        for (const auto& [name, value] : e.attributes) {
            if (name.rfind("xmlns", 0) == 0) continue;
            bool known = false;
            for (std::string_view a : allowed) {
                if (name == a) {
                    known = true;
                    break;
                }
            }
            if (!known) unknown("attribute '" + name + "'", path);
        }
    }

    void check_children(const Element& e, std::initializer_list<std::string_view> allowed,
                        const std::string& path) const {
        for (const Element& child : e.children) {
            bool known = false;
            for (std::string_view a : allowed) {
                if (child.name == a) {
                    known = true;
                    break;
                }
            }
            if (!known) unknown("element '" + child.name + "'", path);
        }
        if (!e.text.empty()) unknown("text content", path);
    }

private:
    ParseMode mode_;
    std::vector<std::string>* warnings_;
};

const std::string* required_attribute(const Element& e, std::string_view name,
                                      const std::string& path) {
    const std::string* value = e.find_attribute(name);
    if (!value) {
        throw SchemaError(path + "/@" + std::string(name) + ": required attribute is missing");
    }
    return value;
}

DataTypeRef parse_data_type(const Element& e, const SchemaChecker& checker,
                            const std::string& path) {
    checker.check_attributes(e, {"namespace", "localName"}, path);
    checker.check_children(e, {}, path);
    DataTypeRef ref;
    ref.namespace_uri = *required_attribute(e, "namespace", path);
    ref.local_name = *required_attribute(e, "localName", path);
    return ref;
}

ServiceRequirement parse_requirement(const Element& e, const SchemaChecker& checker,
                                     const std::string& path) {
    ServiceRequirement r;
    r.kind = requirement_kind_from_string(e.name);
    if (const std::string* weight = e.find_attribute("weight")) {
        r.weight = parse_decimal(*weight, path + "/@weight");
        if (!(r.weight > 0.0)) {
            throw SchemaError(path + "/@weight: weight must be > 0");
        }
    }
    if (r.kind == RequirementKind::QoS) {
        checker.check_attributes(e, {"weight", "name", "operator", "value", "unit"}, path);
        checker.check_children(e, {}, path);
        r.qos_name = *required_attribute(e, "name", path);
        r.qos_operator = qos_operator_from_string(*required_attribute(e, "operator", path));
        QoSValue value;
        value.value = parse_decimal(*required_attribute(e, "value", path), path + "/@value");
        if (const std::string* unit = e.find_attribute("unit")) value.unit = *unit;
        r.qos_value = value;
    } else {
        checker.check_attributes(e, {"weight", "description", "ontologyReference"}, path);
        checker.check_children(e, {"DataType"}, path);
        if (const std::string* d = e.find_attribute("description")) r.description = *d;
        if (const std::string* o = e.find_attribute("ontologyReference")) r.ontology_reference = *o;
        if (const Element* data_type = e.find_child("DataType")) {
            r.data_type = parse_data_type(*data_type, checker, path + "/DataType");
        }
    }
    validate_requirement(r, path);
    return r;
}

void append_requirement(Element& parent, const ServiceRequirement& r) {
    Element& e = parent.add_child(std::string(to_string(r.kind)));
    e.set_attribute("weight", format_decimal(r.weight));
    if (r.kind == RequirementKind::QoS) {
        e.set_attribute("name", r.qos_name ? *r.qos_name : "");
        e.set_attribute("operator", std::string(to_string(r.qos_operator.value_or(QoSOperator::LE))));
        e.set_attribute("value", format_decimal(r.qos_value ? r.qos_value->value : 0.0));
        e.set_attribute("unit", r.qos_value ? r.qos_value->unit : "");
        return;
    }
    if (r.description) e.set_attribute("description", *r.description);
    if (r.ontology_reference) e.set_attribute("ontologyReference", *r.ontology_reference);
    if (r.data_type) {
        Element& dt = e.add_child("DataType");
        dt.set_attribute("namespace", r.data_type->namespace_uri);
        dt.set_attribute("localName", r.data_type->local_name);
    }
}

InvocationDetails parse_invocation(const Element& e, const SchemaChecker& checker,
                                   const std::string& path) {
    checker.check_attributes(e, {"serviceType"}, path);
    checker.check_children(e, {"Entry"}, path);
    InvocationDetails details;
    details.service_type = service_type_from_string(*required_attribute(e, "serviceType", path));
    for (const Element* entry : e.children_named("Entry")) {
        checker.check_attributes(*entry, {"key", "value"}, path + "/Entry");
        checker.check_children(*entry, {}, path + "/Entry");
        std::string key = *required_attribute(*entry, "key", path + "/Entry");
        std::string value = *required_attribute(*entry, "value", path + "/Entry");
        details.entries[key] = value;
    }
    if (details.entries.empty()) {
        throw SchemaError(path + ": invocation entries must be non-empty");
    }
    return details;
}

void append_invocation(Element& parent, const InvocationDetails& details) {
    Element& e = parent.add_child("InvocationDetails");
    e.set_attribute("serviceType", std::string(to_string(details.service_type)));
    for (const auto& [key, value] : details.entries) {
        Element& entry = e.add_child("Entry");
        entry.set_attribute("key", key);
        entry.set_attribute("value", value);
    }
}

}  // namespace

std::string format_decimal(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

ParsedRequest parse_request(std::string_view xml_bytes, ParseMode mode) {
    Element root = xml::parse_document(xml_bytes);
    ParsedRequest out;
    SchemaChecker checker(mode, &out.warnings);
    const std::string path = "/USQLRequest";
    if (root.name != "USQLRequest") {
        throw SchemaError("/" + root.name + ": expected root element USQLRequest");
    }
    checker.check_attributes(root, {"id", "minDegreeOfMatch", "maxResults"}, path);
    checker.check_children(root, {"Targets", "Filters", "Requirements"}, path);

    USQLRequest& request = out.request;
    if (const std::string* id = root.find_attribute("id")) request.request_id = *id;
    if (const std::string* min_degree = root.find_attribute("minDegreeOfMatch")) {
        request.min_degree_of_match = parse_decimal(*min_degree, path + "/@minDegreeOfMatch");
    }
    if (const std::string* max_results = root.find_attribute("maxResults")) {
        request.max_results = parse_uint(*max_results, path + "/@maxResults");
    }

    if (const Element* targets = root.find_child("Targets")) {
        checker.check_attributes(*targets, {}, path + "/Targets");
        for (const Element& child : targets->children) {
            if (child.name != "Target") {
                checker.unknown("element '" + child.name + "'", path + "/Targets");
                continue;
            }
            checker.check_attributes(child, {}, path + "/Targets/Target");
            if (child.text.empty()) {
                throw SchemaError(path + "/Targets/Target: must be non-empty");
            }
            request.targets.push_back(child.text);
        }
    }
    if (const Element* filters = root.find_child("Filters")) {
        checker.check_attributes(*filters, {}, path + "/Filters");
        checker.check_children(*filters, {"Filter"}, path + "/Filters");
        for (const Element* filter : filters->children_named("Filter")) {
            const std::string filter_path = path + "/Filters/Filter";
            checker.check_attributes(*filter, {"name", "value"}, filter_path);
            checker.check_children(*filter, {}, filter_path);
            SearchFilter f;
            f.name = *required_attribute(*filter, "name", filter_path);
            f.value = *required_attribute(*filter, "value", filter_path);
            request.filters.push_back(std::move(f));
        }
    }
    const Element* requirements = root.find_child("Requirements");
    if (!requirements) {
        throw SchemaError(path + "/Requirements: at least one requirement is required");
    }
    checker.check_attributes(*requirements, {}, path + "/Requirements");
    std::size_t index = 0;
    for (const Element& child : requirements->children) {
        bool known_kind = child.name == "Capability" || child.name == "InputElement" ||
                          child.name == "OutputElement" || child.name == "ResourceProperty" ||
                          child.name == "QoS";
        if (!known_kind) {
            checker.unknown("element '" + child.name + "'", path + "/Requirements");
            continue;
        }
        std::string req_path =
            path + "/Requirements/" + child.name + "[" + std::to_string(index) + "]";
        request.requirements.push_back(parse_requirement(child, checker, req_path));
        ++index;
    }
    validate_request(request);
    return out;
}

std::string serialize_request(const USQLRequest& request) {
    Element root{"USQLRequest", {}, {}, {}};
    if (!request.request_id.empty()) root.set_attribute("id", request.request_id);
    root.set_attribute("minDegreeOfMatch", format_decimal(request.min_degree_of_match));
    root.set_attribute("maxResults", format_uint(request.max_results));
    if (!request.targets.empty()) {
        Element& targets = root.add_child("Targets");
        for (const std::string& target : request.targets) {
            targets.add_child("Target").text = target;
        }
    }
    if (!request.filters.empty()) {
        Element& filters = root.add_child("Filters");
        for (const SearchFilter& f : request.filters) {
            Element& filter = filters.add_child("Filter");
            filter.set_attribute("name", f.name);
            filter.set_attribute("value", f.value);
        }
    }
    Element& requirements = root.add_child("Requirements");
    for (const ServiceRequirement& r : request.requirements) {
        append_requirement(requirements, r);
    }
    return xml::serialize_document(root);
}

USQLResponse parse_response(std::string_view xml_bytes) {
    Element root = xml::parse_document(xml_bytes);
    const std::string path = "/USQLResponse";
    if (root.name != "USQLResponse") {
        throw SchemaError("/" + root.name + ": expected root element USQLResponse");
    }
    SchemaChecker checker(ParseMode::Strict, nullptr);
    checker.check_attributes(root, {"requestId", "generatedAt"}, path);
    checker.check_children(root, {"MatchedServiceEntry"}, path);

    USQLResponse response;
    response.request_id = *required_attribute(root, "requestId", path);
    response.generated_at = parse_iso8601_utc(*required_attribute(root, "generatedAt", path));
    for (const Element* entry : root.children_named("MatchedServiceEntry")) {
        const std::string entry_path = path + "/MatchedServiceEntry";
        checker.check_attributes(*entry,
                                 {"degreeOfMatch", "provider", "name", "description",
                                  "serviceType", "advertisementId"},
                                 entry_path);
        checker.check_children(*entry, {"CriterionScores", "InvocationDetails"}, entry_path);
        MatchedServiceEntry e;
        e.degree_of_match = parse_decimal(*required_attribute(*entry, "degreeOfMatch", entry_path),
                                          entry_path + "/@degreeOfMatch");
        if (e.degree_of_match < 0.0 || e.degree_of_match > 1.0) {
            throw SchemaError(entry_path + "/@degreeOfMatch: must be within [0,1]");
        }
        e.provider = *required_attribute(*entry, "provider", entry_path);
        e.name = *required_attribute(*entry, "name", entry_path);
        e.description = *required_attribute(*entry, "description", entry_path);
        e.service_type =
            service_type_from_string(*required_attribute(*entry, "serviceType", entry_path));
        e.advertisement_id = *required_attribute(*entry, "advertisementId", entry_path);
        if (const Element* scores = entry->find_child("CriterionScores")) {
            checker.check_attributes(*scores, {}, entry_path + "/CriterionScores");
            checker.check_children(*scores, {"Criterion"}, entry_path + "/CriterionScores");
            for (const Element* criterion : scores->children_named("Criterion")) {
                const std::string cpath = entry_path + "/CriterionScores/Criterion";
                checker.check_attributes(*criterion, {"index", "score"}, cpath);
                CriterionScore score;
                score.requirement_index =
                    parse_uint(*required_attribute(*criterion, "index", cpath), cpath + "/@index");
                score.score = parse_decimal(*required_attribute(*criterion, "score", cpath),
                                            cpath + "/@score");
                e.criterion_scores.push_back(score);
            }
        }
        const Element* invocation = entry->find_child("InvocationDetails");
        if (!invocation) {
            throw SchemaError(entry_path + "/InvocationDetails: required element is missing");
        }
        e.invocation = parse_invocation(*invocation, checker, entry_path + "/InvocationDetails");
        response.entries.push_back(std::move(e));
    }
    validate_response(response);
    return response;
}

std::string serialize_response(const USQLResponse& response) {
    Element root{"USQLResponse", {}, {}, {}};
    root.set_attribute("requestId", response.request_id);
    root.set_attribute("generatedAt", format_iso8601_utc(response.generated_at));
    for (const MatchedServiceEntry& e : response.entries) {
        Element& entry = root.add_child("MatchedServiceEntry");
        entry.set_attribute("degreeOfMatch", format_decimal(e.degree_of_match));
        entry.set_attribute("provider", e.provider);
        entry.set_attribute("name", e.name);
        entry.set_attribute("description", e.description);
        entry.set_attribute("serviceType", std::string(to_string(e.service_type)));
        entry.set_attribute("advertisementId", e.advertisement_id);
        if (!e.criterion_scores.empty()) {
            Element& scores = entry.add_child("CriterionScores");
            for (const CriterionScore& score : e.criterion_scores) {
                Element& criterion = scores.add_child("Criterion");
                criterion.set_attribute("index", std::to_string(score.requirement_index));
                criterion.set_attribute("score", format_decimal(score.score));
            }
        }
        append_invocation(entry, e.invocation);
    }
    return xml::serialize_document(root);
}

std::string serialize_fault(const Fault& fault) {
    Element root{"USQLFault", {}, {}, {}};
    root.set_attribute("requestId", fault.request_id);
    root.set_attribute("code", fault.code);
    root.add_child("Message").text = fault.message;
    return xml::serialize_document(root);
}

Fault parse_fault(std::string_view xml_bytes) {
    Element root = xml::parse_document(xml_bytes);
    if (root.name != "USQLFault") {
        throw SchemaError("/" + root.name + ": expected root element USQLFault");
    }
    Fault fault;
    if (const std::string* id = root.find_attribute("requestId")) fault.request_id = *id;
    fault.code = *required_attribute(root, "code", "/USQLFault");
    if (const Element* message = root.find_child("Message")) fault.message = message->text;
    return fault;
}

}  // namespace proteus::model

#include "proteus/crawler.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "proteus/errors.hpp"
#include "proteus/xml.hpp"

namespace proteus::crawler {

namespace fs = std::filesystem;

namespace {

const std::map<std::string, std::string>& extension_namespaces() {
    static const std::map<std::string, std::string> table = {
        {".wsdl", std::string(schema_ns::wsdl_subset)},
        {".json", std::string(schema_ns::p2p_json)},
        {".grid", std::string(schema_ns::grid_desc)},
    };
    return table;
}

std::string trim(std::string_view text) {
    std::size_t begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) return "";
    std::size_t end = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(begin, end - begin + 1));
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw BrokerUnreachable("cannot read '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const std::string& required_access_detail(const model::BrokerDescriptor& broker,
                                          const std::string& key) {
    auto it = broker.access_details.find(key);
    if (it == broker.access_details.end()) {
        throw ConfigError("broker '" + broker.id + "': accessDetails." + key + " is required");
    }
    return it->second;
}

std::map<std::string, std::string> propagated_attributes(
    const model::BrokerDescriptor& broker, const std::vector<std::string>& keys) {
    std::map<std::string, std::string> attributes;
    for (const auto& key : keys) {
        auto it = broker.access_details.find(key);
        if (it != broker.access_details.end() && !it->second.empty()) {
            attributes[key] = it->second;
        }
    }
    return attributes;
}

// Parses a full-string double; the grammar does not admit partial numbers.
double parse_number(const std::string& text, const std::string& context) {
    const char* begin = text.c_str();
    char* end = nullptr;
    errno = 0;
    double value = std::strtod(begin, &end);
    if (end != begin + text.size() || text.empty() || errno == ERANGE) {
        throw ParseError(context + ": '" + text + "' is not a number");
    }
    return value;
}

// Resolves a "prefix:localName" type token; only the xsd prefix is defined
// for the XML-based description formats.
model::DataTypeRef parse_xsd_type(const std::string& token, const std::string& context) {
    auto colon = token.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == token.size()) {
        throw ParseError(context + ": type '" + token + "' must be prefix:localName");
    }
    const std::string prefix = token.substr(0, colon);
    if (prefix != "xsd") {
        throw ParseError(context + ": unknown type prefix '" + prefix + "'");
    }
    return {"http://www.w3.org/2001/XMLSchema", token.substr(colon + 1)};
}

// Document-level <qos name=... value=... unit=.../> elements, shared by the
// WSDL-subset and grid-desc grammars.
std::vector<model::AdvertisedProperty> parse_qos_elements(const xml::Element& root) {
    std::vector<model::AdvertisedProperty> properties;
    for (const xml::Element* qos : root.children_named("qos")) {
        const std::string* name = qos->find_attribute("name");
        const std::string* value = qos->find_attribute("value");
        if (!name || name->empty() || !value) {
            throw ParseError("qos element needs name and value attributes");
        }
        model::AdvertisedProperty p;
        p.kind = model::RequirementKind::QoS;
        p.name = *name;
        p.qos_name = *name;
        model::QoSValue qv;
        qv.value = parse_number(*value, "qos '" + *name + "'");
        if (const std::string* unit = qos->find_attribute("unit")) {
            qv.unit = *unit;
        }
        p.qos_value = qv;
        properties.push_back(std::move(p));
    }
    return properties;
}

// Shared advertisement scaffolding: identity, filter attributes (document
// fields win over broker attributes), and invocation skeleton.
model::ServiceAdvertisement base_advertisement(const ServicePublication& publication,
                                               const std::string& operation_name,
                                               const std::string& provider,
                                               model::ServiceType service_type) {
    model::ServiceAdvertisement ad;
    ad.id = model::advertisement_id(publication.source_broker_id, publication.document_id,
                                    operation_name);
    ad.service_type = service_type;
    ad.provider = provider;
    ad.operation_name = operation_name;
    ad.source_broker_id = publication.source_broker_id;
    ad.filter_attributes = publication.broker_attributes;
    ad.filter_attributes["provider"] = provider;
    ad.filter_attributes["serviceType"] = std::string(to_string(service_type));
    ad.invocation.service_type = service_type;
    return ad;
}

void check_unique_operation(std::set<std::string>& seen, const std::string& operation_name) {
    if (!seen.insert(operation_name).second) {
        throw ParseError("duplicate operation name '" + operation_name + "'");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// DirectoryHarvester

std::vector<ServicePublication> DirectoryHarvester::harvest(
    const model::BrokerDescriptor& broker) {
    const fs::path root = required_access_detail(broker, "path");

    std::error_code ec;
    if (!fs::is_directory(root, ec) || ec) {
        throw BrokerUnreachable("broker '" + broker.id + "': no such directory '" +
                                root.string() + "'");
    }

    const fs::path token_file = root / ".token";
    if (fs::exists(token_file, ec) && !ec) {
        const std::string expected = trim(read_file(token_file));
        auto it = broker.access_details.find("token");
        if (it == broker.access_details.end() || trim(it->second) != expected) {
            throw AccessDenied("broker '" + broker.id + "': token rejected");
        }
    }

    std::set<std::string> wanted(options_.extensions.begin(), options_.extensions.end());
    std::vector<fs::path> files;
    try {
        for (const auto& entry : fs::directory_iterator(root)) {
            if (!entry.is_regular_file()) continue;
            const std::string name = entry.path().filename().string();
            if (name.empty() || name.front() == '.') continue;
            const std::string ext = entry.path().extension().string();
            if (extension_namespaces().count(ext) == 0) continue;
            if (!wanted.empty() && wanted.count(ext) == 0) continue;
            files.push_back(entry.path());
        }
    } catch (const fs::filesystem_error& e) {
        throw BrokerUnreachable("broker '" + broker.id + "': cannot list '" + root.string() +
                                "': " + e.what());
    }
    std::sort(files.begin(), files.end());

    const auto attributes = propagated_attributes(broker, options_.propagate_keys);
    std::vector<ServicePublication> publications;
    publications.reserve(files.size());
    for (const auto& file : files) {
        ServicePublication pub;
        pub.source_broker_id = broker.id;
        pub.document_id = file.filename().string();
        pub.schema_namespace = extension_namespaces().at(file.extension().string());
        pub.content = read_file(file);
        pub.broker_attributes = attributes;
        publications.push_back(std::move(pub));
    }
    return publications;
}

// ---------------------------------------------------------------------------
// HttpIndexHarvester

namespace {

struct HttpTarget {
    std::string origin;  // scheme://host:port
    std::string path;    // starts with '/'
};

HttpTarget split_url(const std::string& url, const std::string& broker_id) {
    if (url.rfind("http://", 0) != 0) {
        throw ConfigError("broker '" + broker_id + "': endpoint must be a plain http:// URL");
    }
    const std::size_t authority = std::string("http://").size();
    std::size_t slash = url.find('/', authority);
    if (slash == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, slash), url.substr(slash)};
}

std::string resolve_index_path(const std::string& index_path, const std::string& entry) {
    if (!entry.empty() && entry.front() == '/') {
        return entry;
    }
    std::size_t dir_end = index_path.rfind('/');
    return index_path.substr(0, dir_end + 1) + entry;
}

}  // namespace

std::vector<ServicePublication> HttpIndexHarvester::harvest(
    const model::BrokerDescriptor& broker) {
    const std::string& endpoint = required_access_detail(broker, "endpoint");
    const HttpTarget target = split_url(endpoint, broker.id);

    httplib::Client client(target.origin);
    client.set_connection_timeout(5);
    client.set_read_timeout(5);
    auto token = broker.access_details.find("token");
    if (token != broker.access_details.end()) {
        client.set_default_headers({{"Authorization", "Bearer " + token->second}});
    }

    auto fetch = [&](const std::string& path, const std::string& what) {
        httplib::Result res = client.Get(path);
        if (!res) {
            throw BrokerUnreachable("broker '" + broker.id + "': " + what + " '" +
                                    target.origin + path + "' unreachable");
        }
        if (res->status == 401 || res->status == 403) {
            throw AccessDenied("broker '" + broker.id + "': " + what + " '" + path +
                               "' returned status " + std::to_string(res->status));
        }
        if (res->status != 200) {
            throw BrokerUnreachable("broker '" + broker.id + "': " + what + " '" + path +
                                    "' returned status " + std::to_string(res->status));
        }
        return res->body;
    };

    const std::string index = fetch(target.path, "index");
    const auto attributes = propagated_attributes(
        broker, {"classification", "peerGroup", "virtualOrganization"});

    std::vector<ServicePublication> publications;
    std::istringstream lines(index);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(lines, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;

        std::size_t tab1 = stripped.find('\t');
        std::size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                     : stripped.find('\t', tab1 + 1);
        if (tab2 == std::string::npos || stripped.find('\t', tab2 + 1) != std::string::npos) {
            throw BrokerUnreachable("broker '" + broker.id + "': index line " +
                                    std::to_string(line_number) +
                                    ": expected 3 tab-separated fields");
        }
        ServicePublication pub;
        pub.source_broker_id = broker.id;
        pub.document_id = trim(stripped.substr(0, tab1));
        pub.schema_namespace = trim(stripped.substr(tab1 + 1, tab2 - tab1 - 1));
        if (pub.document_id.empty() || pub.schema_namespace.empty()) {
            throw BrokerUnreachable("broker '" + broker.id + "': index line " +
                                    std::to_string(line_number) + ": empty field");
        }
        const std::string doc_path =
            resolve_index_path(target.path, trim(stripped.substr(tab2 + 1)));
        pub.content = fetch(doc_path, "document '" + pub.document_id + "'");
        pub.broker_attributes = attributes;
        publications.push_back(std::move(pub));
    }
    return publications;
}

// ---------------------------------------------------------------------------
// WsdlSubsetParser

namespace {

xml::Element parse_xml_or_fail(const ServicePublication& publication,
                               std::string_view expected_root) {
    xml::Element root;
    try {
        root = xml::parse_document(publication.content);
    } catch (const SyntaxError& e) {
        throw ParseError(e.what());
    }
    if (root.name != expected_root) {
        throw ParseError("root element must be '" + std::string(expected_root) + "', found '" +
                         root.name + "'");
    }
    return root;
}

// part/input/output/resourceProperty elements share the same attribute shape.
model::AdvertisedProperty parse_typed_property(const xml::Element& element,
                                               model::RequirementKind kind,
                                               const std::string& context) {
    const std::string* name = element.find_attribute("name");
    if (!name || name->empty()) {
        throw ParseError(context + ": name attribute is required");
    }
    model::AdvertisedProperty p;
    p.kind = kind;
    p.name = *name;
    if (const std::string* description = element.find_attribute("description")) {
        p.description = *description;
    }
    if (const std::string* reference = element.find_attribute("modelReference")) {
        p.ontology_reference = *reference;
    }
    if (const std::string* type = element.find_attribute("type")) {
        p.data_type = parse_xsd_type(*type, context + " '" + *name + "'");
    }
    return p;
}

}  // namespace

std::vector<model::ServiceAdvertisement> WsdlSubsetParser::parse(
    const ServicePublication& publication) const {
    if (publication.schema_namespace != schema_ns::wsdl_subset) {
        throw ParseError("publication namespace '" + publication.schema_namespace +
                         "' does not match this parser");
    }
    const xml::Element root = parse_xml_or_fail(publication, "definitions");

    // Messages: name -> parts, referenced from operations by name.
    std::map<std::string, std::vector<model::AdvertisedProperty>> messages;
    for (const xml::Element* message : root.children_named("message")) {
        const std::string* name = message->find_attribute("name");
        if (!name || name->empty()) {
            throw ParseError("message: name attribute is required");
        }
        if (messages.count(*name)) {
            throw ParseError("duplicate message name '" + *name + "'");
        }
        std::vector<model::AdvertisedProperty> parts;
        for (const xml::Element* part : message->children_named("part")) {
            // Direction is decided by the referencing operation; parse as
            // input now and flip to output where referenced.
            parts.push_back(parse_typed_property(*part, model::RequirementKind::InputElement,
                                                 "message '" + *name + "' part"));
        }
        messages.emplace(*name, std::move(parts));
    }

    // The single service/port pair supplies provider and endpoint.
    auto services = root.children_named("service");
    if (services.size() != 1) {
        throw ParseError("expected exactly one service element, found " +
                         std::to_string(services.size()));
    }
    const std::string* provider = services[0]->find_attribute("provider");
    if (!provider || provider->empty()) {
        throw ParseError("service: provider attribute is required");
    }
    auto ports = services[0]->children_named("port");
    if (ports.size() != 1) {
        throw ParseError("service: expected exactly one port element");
    }
    const std::string* location = ports[0]->find_attribute("location");
    if (!location || location->empty()) {
        throw ParseError("port: location attribute is required");
    }
    const std::string* binding = ports[0]->find_attribute("binding");

    const auto qos_properties = parse_qos_elements(root);

    auto resolve_message = [&](const xml::Element& op_child, const std::string& op_name)
        -> const std::vector<model::AdvertisedProperty>& {
        const std::string* message = op_child.find_attribute("message");
        if (!message || message->empty()) {
            throw ParseError("operation '" + op_name + "': " + op_child.name +
                             " needs a message attribute");
        }
        auto it = messages.find(*message);
        if (it == messages.end()) {
            throw ParseError("operation '" + op_name + "': unknown message '" + *message + "'");
        }
        return it->second;
    };

    std::vector<model::ServiceAdvertisement> ads;
    std::set<std::string> seen_operations;
    for (const xml::Element* port_type : root.children_named("portType")) {
        for (const xml::Element* op : port_type->children_named("operation")) {
            const std::string* op_name = op->find_attribute("name");
            if (!op_name || op_name->empty()) {
                throw ParseError("operation: name attribute is required");
            }
            check_unique_operation(seen_operations, *op_name);

            model::ServiceAdvertisement ad = base_advertisement(
                publication, *op_name, *provider, model::ServiceType::WebService);
            if (const std::string* classification = root.find_attribute("classification")) {
                ad.filter_attributes["classification"] = *classification;
            }

            ad.capability.kind = model::RequirementKind::Capability;
            ad.capability.name = *op_name;
            if (const xml::Element* doc = op->find_child("documentation")) {
                if (!doc->text.empty()) ad.capability.description = doc->text;
            }
            if (const std::string* reference = op->find_attribute("modelReference")) {
                ad.capability.ontology_reference = *reference;
            }

            if (const xml::Element* input = op->find_child("input")) {
                ad.inputs = resolve_message(*input, *op_name);
            }
            if (const xml::Element* output = op->find_child("output")) {
                ad.outputs = resolve_message(*output, *op_name);
                for (auto& p : ad.outputs) p.kind = model::RequirementKind::OutputElement;
            }
            ad.qos_properties = qos_properties;

            ad.invocation.entries["endpoint"] = *location;
            ad.invocation.entries["operation"] = *op_name;
            if (binding && !binding->empty()) {
                ad.invocation.entries["binding"] = *binding;
            }
            ads.push_back(std::move(ad));
        }
    }
    return ads;
}

// ---------------------------------------------------------------------------
// P2PJsonParser

namespace {

using nlohmann::json;

const json& required_field(const json& object, const char* key, const std::string& context) {
    auto it = object.find(key);
    if (it == object.end()) {
        throw ParseError(context + ": '" + key + "' is required");
    }
    return *it;
}

std::string required_string(const json& object, const char* key, const std::string& context) {
    const json& value = required_field(object, key, context);
    if (!value.is_string() || value.get<std::string>().empty()) {
        throw ParseError(context + ": '" + key + "' must be a non-empty string");
    }
    return value.get<std::string>();
}

std::optional<std::string> optional_string(const json& object, const char* key,
                                           const std::string& context) {
    auto it = object.find(key);
    if (it == object.end()) return std::nullopt;
    if (!it->is_string()) {
        throw ParseError(context + ": '" + key + "' must be a string");
    }
    return it->get<std::string>();
}

model::AdvertisedProperty parse_json_element(const json& element, model::RequirementKind kind,
                                             const std::string& context) {
    if (!element.is_object()) {
        throw ParseError(context + ": elements must be objects");
    }
    model::AdvertisedProperty p;
    p.kind = kind;
    p.name = required_string(element, "name", context);
    p.description = optional_string(element, "description", context);
    p.ontology_reference = optional_string(element, "concept", context);
    if (auto type = optional_string(element, "type", context)) {
        if (type->empty()) {
            throw ParseError(context + ": 'type' must be non-empty");
        }
        p.data_type = model::DataTypeRef{"urn:proteus:datatypes:json", *type};
    }
    return p;
}

std::vector<model::AdvertisedProperty> parse_json_qos(const json& document) {
    std::vector<model::AdvertisedProperty> properties;
    auto it = document.find("qos");
    if (it == document.end()) return properties;
    if (!it->is_array()) {
        throw ParseError("'qos' must be an array");
    }
    for (const json& entry : *it) {
        if (!entry.is_object()) {
            throw ParseError("'qos' entries must be objects");
        }
        model::AdvertisedProperty p;
        p.kind = model::RequirementKind::QoS;
        p.name = required_string(entry, "name", "qos entry");
        p.qos_name = p.name;
        const json& value = required_field(entry, "value", "qos '" + p.name + "'");
        if (!value.is_number()) {
            throw ParseError("qos '" + p.name + "': 'value' must be a number");
        }
        model::QoSValue qv;
        qv.value = value.get<double>();
        if (auto unit = optional_string(entry, "unit", "qos '" + p.name + "'")) {
            qv.unit = *unit;
        }
        p.qos_value = qv;
        properties.push_back(std::move(p));
    }
    return properties;
}

}  // namespace

std::vector<model::ServiceAdvertisement> P2PJsonParser::parse(
    const ServicePublication& publication) const {
    if (publication.schema_namespace != schema_ns::p2p_json) {
        throw ParseError("publication namespace '" + publication.schema_namespace +
                         "' does not match this parser");
    }
    const json document = json::parse(publication.content, nullptr, false);
    if (document.is_discarded()) {
        throw ParseError("malformed JSON");
    }
    if (!document.is_object()) {
        throw ParseError("document must be a JSON object");
    }

    required_string(document, "service", "document");
    const std::string provider = required_string(document, "provider", "document");
    const std::string pipe = required_string(document, "pipe", "document");
    const auto peer_group = optional_string(document, "peerGroup", "document");
    const auto qos_properties = parse_json_qos(document);

    const json& operations = required_field(document, "operations", "document");
    if (!operations.is_array()) {
        throw ParseError("'operations' must be an array");
    }

    std::vector<model::ServiceAdvertisement> ads;
    std::set<std::string> seen_operations;
    for (const json& op : operations) {
        if (!op.is_object()) {
            throw ParseError("'operations' entries must be objects");
        }
        const std::string op_name = required_string(op, "name", "operation");
        check_unique_operation(seen_operations, op_name);
        const std::string context = "operation '" + op_name + "'";

        model::ServiceAdvertisement ad =
            base_advertisement(publication, op_name, provider, model::ServiceType::P2PService);
        if (peer_group && !peer_group->empty()) {
            ad.filter_attributes["peerGroup"] = *peer_group;
        }

        ad.capability.kind = model::RequirementKind::Capability;
        ad.capability.name = op_name;
        ad.capability.description = optional_string(op, "description", context);
        ad.capability.ontology_reference = optional_string(op, "concept", context);

        for (const char* key : {"inputs", "outputs"}) {
            auto it = op.find(key);
            if (it == op.end()) continue;
            if (!it->is_array()) {
                throw ParseError(context + ": '" + std::string(key) + "' must be an array");
            }
            const bool is_input = std::string_view(key) == "inputs";
            for (const json& element : *it) {
                auto kind = is_input ? model::RequirementKind::InputElement
                                     : model::RequirementKind::OutputElement;
                auto parsed = parse_json_element(element, kind, context);
                (is_input ? ad.inputs : ad.outputs).push_back(std::move(parsed));
            }
        }
        ad.qos_properties = qos_properties;

        ad.invocation.entries["pipe"] = pipe;
        ad.invocation.entries["operation"] = op_name;
        if (peer_group && !peer_group->empty()) {
            ad.invocation.entries["peerGroup"] = *peer_group;
        }
        ads.push_back(std::move(ad));
    }
    return ads;
}

// ---------------------------------------------------------------------------
// GridDescParser

std::vector<model::ServiceAdvertisement> GridDescParser::parse(
    const ServicePublication& publication) const {
    if (publication.schema_namespace != schema_ns::grid_desc) {
        throw ParseError("publication namespace '" + publication.schema_namespace +
                         "' does not match this parser");
    }
    const xml::Element root = parse_xml_or_fail(publication, "gridService");

    const std::string* provider = root.find_attribute("provider");
    if (!provider || provider->empty()) {
        throw ParseError("gridService: provider attribute is required");
    }
    const std::string* organization = root.find_attribute("virtualOrganization");

    std::vector<model::AdvertisedProperty> resource_properties;
    for (const xml::Element* rp : root.children_named("resourceProperty")) {
        resource_properties.push_back(parse_typed_property(
            *rp, model::RequirementKind::ResourceProperty, "resourceProperty"));
    }
    const auto qos_properties = parse_qos_elements(root);

    std::vector<model::ServiceAdvertisement> ads;
    std::set<std::string> seen_operations;
    for (const xml::Element* op : root.children_named("operation")) {
        const std::string* op_name = op->find_attribute("name");
        if (!op_name || op_name->empty()) {
            throw ParseError("operation: name attribute is required");
        }
        check_unique_operation(seen_operations, *op_name);
        const std::string* factory = op->find_attribute("factory");
        if (!factory || factory->empty()) {
            throw ParseError("operation '" + *op_name + "': factory attribute is required");
        }

        model::ServiceAdvertisement ad =
            base_advertisement(publication, *op_name, *provider, model::ServiceType::GridService);
        if (organization && !organization->empty()) {
            ad.filter_attributes["virtualOrganization"] = *organization;
        }

        ad.capability.kind = model::RequirementKind::Capability;
        ad.capability.name = *op_name;
        if (const xml::Element* doc = op->find_child("documentation")) {
            if (!doc->text.empty()) ad.capability.description = doc->text;
        }
        if (const std::string* reference = op->find_attribute("modelReference")) {
            ad.capability.ontology_reference = *reference;
        }

        for (const xml::Element* input : op->children_named("input")) {
            ad.inputs.push_back(parse_typed_property(
                *input, model::RequirementKind::InputElement, "operation '" + *op_name + "' input"));
        }
        for (const xml::Element* output : op->children_named("output")) {
            ad.outputs.push_back(parse_typed_property(*output, model::RequirementKind::OutputElement,
                                                      "operation '" + *op_name + "' output"));
        }
        ad.resource_properties = resource_properties;
        ad.qos_properties = qos_properties;

        ad.invocation.entries["factory"] = *factory;
        ad.invocation.entries["operation"] = *op_name;
        if (organization && !organization->empty()) {
            ad.invocation.entries["virtualOrganization"] = *organization;
        }
        ads.push_back(std::move(ad));
    }
    return ads;
}

// ---------------------------------------------------------------------------
// Registration

void register_builtin_crawlers(plugins::Registry& registry) {
    using plugins::PluginKind;
    auto harvester = [&](const std::string& key, DirectoryHarvester::Options options) {
        registry.register_plugin({PluginKind::Harvester, key, "1.0.0",
                                  [options = std::move(options)] {
                                      return std::make_shared<DirectoryHarvester>(options);
                                  }});
    };
    harvester("dir", {{}, {"classification", "peerGroup", "virtualOrganization"}});
    harvester("sim-registry", {{".wsdl"}, {"classification"}});
    harvester("sim-p2p", {{".json"}, {"peerGroup"}});
    harvester("sim-grid", {{".grid"}, {"virtualOrganization"}});
    registry.register_plugin({PluginKind::Harvester, "http-index", "1.0.0",
                              [] { return std::make_shared<HttpIndexHarvester>(); }});

    registry.register_plugin({PluginKind::Parser, std::string(schema_ns::wsdl_subset), "1.0.0",
                              [] { return std::make_shared<WsdlSubsetParser>(); }});
    registry.register_plugin({PluginKind::Parser, std::string(schema_ns::p2p_json), "1.0.0",
                              [] { return std::make_shared<P2PJsonParser>(); }});
    registry.register_plugin({PluginKind::Parser, std::string(schema_ns::grid_desc), "1.0.0",
                              [] { return std::make_shared<GridDescParser>(); }});
}

// ---------------------------------------------------------------------------
// Crawler

std::shared_ptr<Crawler::BrokerState> Crawler::state_for(const std::string& broker_id) {
    std::lock_guard lock(states_mutex_);
    auto& state = states_[broker_id];
    if (!state) {
        state = std::make_shared<BrokerState>();
    }
    return state;
}

CrawlReport Crawler::run_crawl(const model::BrokerDescriptor& broker, std::int64_t started_at) {
    CrawlReport report;
    report.broker_id = broker.id;
    report.started_at = started_at;
    try {
        auto harvester =
            registry_.select_as<Harvester>(plugins::PluginKind::Harvester, broker.broker_type);
        auto publications = harvester->harvest(broker);
        report.publications_found = publications.size();

        std::vector<model::ServiceAdvertisement> batch;
        for (const auto& publication : publications) {
            try {
                auto parser = registry_.select_as<Parser>(plugins::PluginKind::Parser,
                                                          publication.schema_namespace);
                auto ads = parser->parse(publication);
                for (auto& ad : ads) {
                    ad.harvested_at = started_at;
                    batch.push_back(std::move(ad));
                }
            } catch (const Error& e) {
                report.parse_failures.emplace_back(publication.document_id, e.what());
            }
        }
        const std::size_t stored = batch.size();
        repository_.upsert_broker_batch(broker.id, std::move(batch));
        report.advertisements_stored = stored;
    } catch (const std::exception& e) {
        // Harvest or persistence failure: the broker keeps its previous
        // repository state and the next due tick retries.
        report.error = e.what();
    }
    report.finished_at = clock_->now_epoch_seconds();
    return report;
}

CrawlReport Crawler::crawl_broker(const model::BrokerDescriptor& broker) {
    auto state = state_for(broker.id);
    std::lock_guard busy(state->busy);
    std::int64_t now = clock_->now_epoch_seconds();
    {
        std::lock_guard lock(states_mutex_);
        state->last_start = now;
    }
    return run_crawl(broker, now);
}

std::vector<CrawlReport> Crawler::crawl_once(const std::vector<model::BrokerDescriptor>& brokers) {
    std::vector<CrawlReport> reports;
    reports.reserve(brokers.size());
    for (const auto& broker : brokers) {
        reports.push_back(crawl_broker(broker));
    }
    return reports;
}

std::vector<CrawlReport> Crawler::tick(const std::vector<model::BrokerDescriptor>& brokers) {
    std::vector<CrawlReport> reports;
    for (const auto& broker : brokers) {
        auto state = state_for(broker.id);
        std::unique_lock busy(state->busy, std::try_to_lock);
        std::int64_t now;
        {
            std::lock_guard lock(states_mutex_);
            now = clock_->now_epoch_seconds();
            if (state->last_start &&
                now - *state->last_start <
                    static_cast<std::int64_t>(broker.crawl_interval_seconds)) {
                continue;  // not due yet
            }
            if (!busy.owns_lock()) {
                continue;  // previous crawl still running; defer, never overlap
            }
            state->last_start = now;
        }
        reports.push_back(run_crawl(broker, now));
    }
    return reports;
}

// ---------------------------------------------------------------------------
// Broker configuration

std::vector<model::BrokerDescriptor> load_broker_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open broker configuration '" + path + "'");
    }
    const fs::path base = fs::path(path).parent_path();

    std::vector<model::BrokerDescriptor> brokers;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string context = path + " line " + std::to_string(line_number);
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;

        std::istringstream fields(stripped);
        model::BrokerDescriptor broker;
        std::string interval_token;
        if (!(fields >> broker.id >> broker.broker_type >> interval_token)) {
            throw ConfigError(context + ": expected `id type intervalSeconds key=value...`");
        }

        char* end = nullptr;
        errno = 0;
        unsigned long interval = std::strtoul(interval_token.c_str(), &end, 10);
        if (end != interval_token.c_str() + interval_token.size() || errno == ERANGE ||
            interval == 0 || interval > std::numeric_limits<std::uint32_t>::max()) {
            throw ConfigError(context + ": crawl interval '" + interval_token +
                              "' must be a positive integer");
        }
        broker.crawl_interval_seconds = static_cast<std::uint32_t>(interval);

        std::string pair;
        while (fields >> pair) {
            std::size_t eq = pair.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw ConfigError(context + ": malformed access detail '" + pair +
                                  "', expected key=value");
            }
            const std::string key = pair.substr(0, eq);
            std::string value = pair.substr(eq + 1);
            if (broker.access_details.count(key)) {
                throw ConfigError(context + ": duplicate access detail '" + key + "'");
            }
            if (key == "path" && !value.empty() && !fs::path(value).is_absolute()) {
                value = (base / value).string();
            }
            broker.access_details.emplace(key, std::move(value));
        }

        if (!seen_ids.insert(broker.id).second) {
            throw ConfigError(context + ": duplicate broker id '" + broker.id + "'");
        }
        brokers.push_back(std::move(broker));
    }
    return brokers;
}

}  // namespace proteus::crawler

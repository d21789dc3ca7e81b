#include "proteus/plugins.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "proteus/errors.hpp"

namespace proteus::plugins {

namespace {

std::string describe(PluginKind kind, const std::string& key) {
    return "(" + std::string(to_string(kind)) + ", '" + key + "')";
}

// Reads a tab-separated file: strips comments after '#', trims trailing CR,
// skips blank lines, returns the surviving field rows.
std::vector<std::vector<std::string>> read_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) {
        throw ConfigError("cannot open data file '" + path + "'");
    }
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
            line.pop_back();
        }
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream split(line);
        std::string field;
        while (std::getline(split, field, '\t')) fields.push_back(field);
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace

std::string_view to_string(PluginKind kind) {
    switch (kind) {
        case PluginKind::Harvester: return "Harvester";
        case PluginKind::Parser: return "Parser";
        case PluginKind::QoSMatcher: return "QoSMatcher";
        case PluginKind::DatatypeMatcher: return "DatatypeMatcher";
        case PluginKind::TextMatcher: return "TextMatcher";
        case PluginKind::OntologyMatcher: return "OntologyMatcher";
    }
    return "?";
}

PluginKind plugin_kind_from_string(std::string_view name) {
    if (name == "Harvester") return PluginKind::Harvester;
    if (name == "Parser") return PluginKind::Parser;
    if (name == "QoSMatcher") return PluginKind::QoSMatcher;
    if (name == "DatatypeMatcher") return PluginKind::DatatypeMatcher;
    if (name == "TextMatcher") return PluginKind::TextMatcher;
    if (name == "OntologyMatcher") return PluginKind::OntologyMatcher;
    throw ConfigError("unknown plugin kind '" + std::string(name) + "'");
}

void Registry::register_plugin(PluginDescriptor descriptor) {
    std::unique_lock lock(mutex_);
    for (const Entry& entry : entries_) {
        if (entry.descriptor.kind == descriptor.kind && entry.descriptor.key == descriptor.key) {
            throw DuplicatePlugin("plugin " + describe(descriptor.kind, descriptor.key) +
                                  " is already registered");
        }
    }
    std::shared_ptr<Plugin> instance = descriptor.factory();
    entries_.push_back(Entry{std::move(descriptor), std::move(instance)});
}

void Registry::deregister(PluginKind kind, const std::string& key) {
    std::unique_lock lock(mutex_);
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& entry) {
        return entry.descriptor.kind == kind && entry.descriptor.key == key;
    });
    if (it == entries_.end()) {
        throw PluginNotFound("no plugin " + describe(kind, key) + " registered");
    }
    entries_.erase(it);
}

std::shared_ptr<Plugin> Registry::select(PluginKind kind, const std::string& key) const {
    std::shared_lock lock(mutex_);
    for (const Entry& entry : entries_) {
        if (entry.descriptor.kind == kind && entry.descriptor.key == key) {
            return entry.instance;
        }
    }
    throw PluginNotFound("no plugin " + describe(kind, key) + " registered");
}

bool Registry::contains(PluginKind kind, const std::string& key) const {
    std::shared_lock lock(mutex_);
    return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& entry) {
        return entry.descriptor.kind == kind && entry.descriptor.key == key;
    });
}

std::vector<PluginDescriptor> Registry::list(PluginKind kind) const {
    std::shared_lock lock(mutex_);
    std::vector<PluginDescriptor> out;
    for (const Entry& entry : entries_) {
        if (entry.descriptor.kind == kind) out.push_back(entry.descriptor);
    }
    return out;
}

std::vector<PluginDescriptor> Registry::list_all() const {
    std::shared_lock lock(mutex_);
    std::vector<PluginDescriptor> out;
    out.reserve(entries_.size());
    for (const Entry& entry : entries_) out.push_back(entry.descriptor);
    return out;
}

void Registry::throw_wrong_interface(PluginKind kind, const std::string& key) {
    throw PluginNotFound("plugin " + describe(kind, key) +
                         " does not implement the requested interface");
}

// ---------------------------------------------------------------------------
// OntologyTaxonomy

OntologyTaxonomy OntologyTaxonomy::load_file(const std::string& path) {
    std::vector<std::pair<std::string, std::string>> edges;
    OntologyTaxonomy taxonomy;
    for (const std::vector<std::string>& row : read_tsv(path)) {
        if (row.size() == 1) {
            taxonomy.parent_.emplace(row[0], std::nullopt);  // bare root concept
        } else if (row.size() == 2) {
            edges.emplace_back(row[0], row[1]);
        } else {
            throw ConfigError("taxonomy file '" + path + "': expected 'child<TAB>parent' rows");
        }
    }
    OntologyTaxonomy from = from_edges(edges);
    // merge bare concepts declared above
    for (auto& [concept_uri, parent] : taxonomy.parent_) {
        from.parent_.emplace(concept_uri, parent);
    }
    return from;
}

OntologyTaxonomy OntologyTaxonomy::from_edges(
    const std::vector<std::pair<std::string, std::string>>& child_parent_edges) {
    OntologyTaxonomy taxonomy;
    for (const auto& [child, parent] : child_parent_edges) {
        auto [it, inserted] = taxonomy.parent_.emplace(child, parent);
        if (!inserted) {
            if (it->second && *it->second != parent) {
                throw ConfigError("taxonomy: concept '" + child + "' has two parents");
            }
            it->second = parent;  // was only known as somebody's parent so far
        }
        taxonomy.parent_.emplace(parent, std::nullopt);  // make the parent known
    }
    // cycle check: walking up from any node must terminate
    for (const auto& [concept_uri, _] : taxonomy.parent_) {
        std::size_t steps = 0;
        const std::string* cursor = &concept_uri;
        while (true) {
            auto it = taxonomy.parent_.find(*cursor);
            if (it == taxonomy.parent_.end() || !it->second) break;
            cursor = &*it->second;
            if (++steps > taxonomy.parent_.size()) {
                throw ConfigError("taxonomy: cycle through concept '" + concept_uri + "'");
            }
        }
    }
    return taxonomy;
}

bool OntologyTaxonomy::contains(const std::string& concept_uri) const {
    return parent_.count(concept_uri) > 0;
}

int OntologyTaxonomy::subsumption_distance(const std::string& descendant,
                                           const std::string& ancestor) const {
    if (!contains(descendant) || !contains(ancestor)) return -1;
    int distance = 0;
    const std::string* cursor = &descendant;
    while (true) {
        if (*cursor == ancestor) return distance;
        auto it = parent_.find(*cursor);
        if (it == parent_.end() || !it->second) return -1;
        cursor = &*it->second;
        ++distance;
    }
}

// ---------------------------------------------------------------------------
// Built-in matchers

namespace {

// ASCII-lowercased token counts; bytes >= 0x80 are treated as word
// characters so non-ASCII text still forms tokens.
std::map<std::string, int> token_counts(const std::string& text) {
    std::map<std::string, int> counts;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            ++counts[token];
            token.clear();
        }
    };
    for (char raw : text) {
        auto c = static_cast<unsigned char>(raw);
        if (std::isalnum(c) || c >= 0x80) {
            token += static_cast<char>(std::tolower(c));
        } else {
            flush();
        }
    }
    flush();
    return counts;
}

}  // namespace

double TokenCosineTextMatcher::similarity(const std::string& a, const std::string& b) const {
    std::map<std::string, int> ca = token_counts(a);
    std::map<std::string, int> cb = token_counts(b);
    if (ca.empty() || cb.empty()) return 0.0;
    double dot = 0.0;
    for (const auto& [token, count] : ca) {
        auto it = cb.find(token);
        if (it != cb.end()) dot += static_cast<double>(count) * it->second;
    }
    double norm_a = 0.0, norm_b = 0.0;
    for (const auto& [token, count] : ca) norm_a += static_cast<double>(count) * count;
    for (const auto& [token, count] : cb) norm_b += static_cast<double>(count) * count;
    // sqrt of the product, not the product of sqrts: identical token vectors
    // then divide out exactly and score exactly 1.
    return std::min(1.0, dot / std::sqrt(norm_a * norm_b));
}

double TaxonomyPathOntologyMatcher::similarity(const std::string& c1, const std::string& c2) const {
    if (c1 == c2) return 1.0;  // identity holds even for concepts outside the taxonomy
    int down = taxonomy_->subsumption_distance(c1, c2);
    int up = taxonomy_->subsumption_distance(c2, c1);
    int path = down >= 0 ? down : up;
    if (path < 0) return 0.0;  // unknown concept or no subsumption relation
    return 1.0 / (1.0 + static_cast<double>(path));
}

double PromotionDatatypeMatcher::match(const model::DataTypeRef& requested,
                                       const model::DataTypeRef& advertised) const {
    if (requested.namespace_uri != namespace_uri_ || advertised.namespace_uri != namespace_uri_) {
        return 0.0;  // cross-namespace (or foreign) pairs never match
    }
    if (requested.local_name == advertised.local_name) return 1.0;
    for (const auto& [from, to] : promotions_) {
        if (requested.local_name == from && advertised.local_name == to) return 0.8;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Unit table + numeric QoS matcher

UnitTable UnitTable::load_file(const std::string& path) {
    UnitTable table;
    for (const std::vector<std::string>& row : read_tsv(path)) {
        if (row.size() != 3) {
            throw ConfigError("unit table '" + path + "': expected 'unit<TAB>dimension<TAB>factor'");
        }
        char* end = nullptr;
        double factor = std::strtod(row[2].c_str(), &end);
        if (end != row[2].c_str() + row[2].size() || !(factor > 0.0)) {
            throw ConfigError("unit table '" + path + "': bad factor '" + row[2] + "'");
        }
        table.add(row[0], row[1], factor);
    }
    return table;
}

void UnitTable::add(const std::string& unit, const std::string& dimension, double factor) {
    rows_[unit] = Row{dimension, factor};
}

std::pair<double, double> UnitTable::normalize(const model::QoSValue& required,
                                               const model::QoSValue& advertised) const {
    auto lookup = [this](const std::string& unit) -> Row {
        if (unit.empty()) return Row{"", 1.0};  // dimensionless
        auto it = rows_.find(unit);
        if (it == rows_.end()) {
            throw UnitMismatch("unknown unit '" + unit + "'");
        }
        return it->second;
    };
    Row r = lookup(required.unit);
    Row a = lookup(advertised.unit);
    if (!r.dimension.empty() && !a.dimension.empty() && r.dimension != a.dimension) {
        throw UnitMismatch("cannot compare " + r.dimension + " ('" + required.unit + "') to " +
                           a.dimension + " ('" + advertised.unit + "')");
    }
    return {required.value * r.factor, advertised.value * a.factor};
}

double NumericQoSMatcher::match(const model::ServiceRequirement& r,
                                const model::AdvertisedProperty& p) const {
    if (!r.qos_value || !p.qos_value) return 0.0;
    auto [required, advertised] = units_->normalize(*r.qos_value, *p.qos_value);
    switch (r.qos_operator.value_or(model::QoSOperator::LE)) {
        case model::QoSOperator::LE: return advertised <= required ? 1.0 : 0.0;
        case model::QoSOperator::GE: return advertised >= required ? 1.0 : 0.0;
        case model::QoSOperator::EQ: {
            double tolerance = 1e-9 * std::max(1.0, std::abs(required));
            return std::abs(advertised - required) <= tolerance ? 1.0 : 0.0;
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Wiring

void register_builtin_matchers(Registry& registry, const std::string& data_dir,
                               std::shared_ptr<const OntologyTaxonomy> taxonomy) {
    registry.register_plugin({PluginKind::TextMatcher, "token-cosine", "1.0.0",
                              [] { return std::make_shared<TokenCosineTextMatcher>(); }});
    registry.register_plugin({PluginKind::OntologyMatcher, "taxonomy-path", "1.0.0", [taxonomy] {
                                  return std::make_shared<TaxonomyPathOntologyMatcher>(taxonomy);
                              }});

    // one datatype matcher per namespace appearing in the promotion table,
    // in order of first appearance
    std::vector<std::string> namespaces;
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> promotions;
    const std::string promotions_path = data_dir + "/datatype-promotions.tsv";
    for (const std::vector<std::string>& row : read_tsv(promotions_path)) {
        if (row.size() != 3) {
            throw ConfigError("promotion table '" + promotions_path +
                              "': expected 'namespace<TAB>from<TAB>to'");
        }
        if (!promotions.count(row[0])) namespaces.push_back(row[0]);
        promotions[row[0]].emplace_back(row[1], row[2]);
    }
    for (const std::string& ns : namespaces) {
        auto rows = promotions[ns];
        registry.register_plugin({PluginKind::DatatypeMatcher, ns, "1.0.0", [ns, rows] {
                                      return std::make_shared<PromotionDatatypeMatcher>(ns, rows);
                                  }});
    }

    auto units =
        std::make_shared<const UnitTable>(UnitTable::load_file(data_dir + "/qos-units.tsv"));
    for (const char* name : {"ResponseTime", "Availability", "Reliability", "Throughput"}) {
        registry.register_plugin({PluginKind::QoSMatcher, name, "1.0.0", [units] {
                                      return std::make_shared<NumericQoSMatcher>(units);
                                  }});
    }
}

algebra::MatcherSuite make_matcher_suite(const Registry& registry,
                                         const MatcherSelection& selection) {
    algebra::MatcherSuite suite;
    auto text = registry.select_as<TextMatcher>(PluginKind::TextMatcher, selection.text);
    suite.text = [text](const std::string& a, const std::string& b) {
        return text->similarity(a, b);
    };
    auto ontology =
        registry.select_as<OntologyMatcher>(PluginKind::OntologyMatcher, selection.ontology);
    suite.ontology = [ontology](const std::string& c1, const std::string& c2) {
        return ontology->similarity(c1, c2);
    };

    // snapshot the datatype matchers by namespace
    std::map<std::string, std::shared_ptr<DatatypeMatcher>> by_namespace;
    for (const PluginDescriptor& d : registry.list(PluginKind::DatatypeMatcher)) {
        by_namespace[d.key] =
            registry.select_as<DatatypeMatcher>(PluginKind::DatatypeMatcher, d.key);
    }
    suite.datatype = [by_namespace](const model::DataTypeRef& requested,
                                    const model::DataTypeRef& advertised) {
        auto it = by_namespace.find(requested.namespace_uri);
        if (it == by_namespace.end()) return 0.0;  // no matcher for this namespace
        return it->second->match(requested, advertised);
    };

    for (const PluginDescriptor& d : registry.list(PluginKind::QoSMatcher)) {
        auto matcher = registry.select_as<QoSMatcher>(PluginKind::QoSMatcher, d.key);
        suite.qos[d.key] = [matcher](const model::ServiceRequirement& r,
                                     const model::AdvertisedProperty& p) {
            try {
                return matcher->match(r, p);
            } catch (const UnitMismatch&) {
                return 0.0;  // incomparable units cannot satisfy the constraint
            }
        };
    }
    return suite;
}

}  // namespace proteus::plugins

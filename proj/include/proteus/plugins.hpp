#pragma once

// The extensibility mechanism: a registry of plugin descriptors with a
// selector, plus the built-in matcher plugins (text, ontology, datatype,
// QoS) that back the matchmaking algebra by default.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "proteus/algebra.hpp"
#include "proteus/model.hpp"

namespace proteus::plugins {

enum class PluginKind {
    Harvester,         // keyed by broker type
    Parser,            // keyed by description-format namespace
    QoSMatcher,        // keyed by QoS property name
    DatatypeMatcher,   // keyed by datatype namespace
    TextMatcher,       // keyed by matcher name
    OntologyMatcher,   // keyed by matcher name
};

std::string_view to_string(PluginKind kind);
PluginKind plugin_kind_from_string(std::string_view name);

// Root of every pluggable component. Instances must be stateless or
// internally synchronized: the registry hands the same instance to
// concurrent callers.
class Plugin {
public:
    virtual ~Plugin() = default;
};

struct PluginDescriptor {
    PluginKind kind = PluginKind::TextMatcher;
    std::string key;
    std::string version;
    std::function<std::shared_ptr<Plugin>()> factory;
};

// Registry + selector. (kind, key) is unique; registration order is
// preserved for listing. Selection is safe from concurrent readers;
// registration/deregistration takes the writer lock (normally done once at
// startup).
class Registry {
public:
    // Instantiates the plugin eagerly via descriptor.factory.
    // Throws DuplicatePlugin when (kind, key) is already present.
    void register_plugin(PluginDescriptor descriptor);

    // Throws PluginNotFound when (kind, key) is absent.
    void deregister(PluginKind kind, const std::string& key);

    // Returns the shared instance. Throws PluginNotFound when absent.
    std::shared_ptr<Plugin> select(PluginKind kind, const std::string& key) const;

    // select + downcast to the concrete plugin interface.
    template <typename T>
    std::shared_ptr<T> select_as(PluginKind kind, const std::string& key) const {
        auto instance = std::dynamic_pointer_cast<T>(select(kind, key));
        if (!instance) {
            throw_wrong_interface(kind, key);
        }
        return instance;
    }

    bool contains(PluginKind kind, const std::string& key) const;

    // Descriptors of one kind, in registration order.
    std::vector<PluginDescriptor> list(PluginKind kind) const;

    // Every descriptor, in registration order.
    std::vector<PluginDescriptor> list_all() const;

private:
    [[noreturn]] static void throw_wrong_interface(PluginKind kind, const std::string& key);

    struct Entry {
        PluginDescriptor descriptor;
        std::shared_ptr<Plugin> instance;
    };

    mutable std::shared_mutex mutex_;
    std::vector<Entry> entries_;  // registration order; linear scan is fine at this scale
};

// ---------------------------------------------------------------------------
// Matcher plugin interfaces

class TextMatcher : public Plugin {
public:
    virtual double similarity(const std::string& a, const std::string& b) const = 0;
};

class OntologyMatcher : public Plugin {
public:
    virtual double similarity(const std::string& c1, const std::string& c2) const = 0;
};

class DatatypeMatcher : public Plugin {
public:
    virtual double match(const model::DataTypeRef& requested,
                         const model::DataTypeRef& advertised) const = 0;
};

class QoSMatcher : public Plugin {
public:
    // Throws UnitMismatch when the two values cannot be brought to a common
    // unit; otherwise strictly 0 or 1 (constraints are binary).
    virtual double match(const model::ServiceRequirement& r,
                         const model::AdvertisedProperty& p) const = 0;
};

// ---------------------------------------------------------------------------
// Concept taxonomy backing the default ontology matcher

// A forest of isA edges over concept URIs: each concept has at most one
// parent and no cycles. Loaded from a tab-separated file of
// `child<TAB>parent` lines (`#` starts a comment; a line with a single URI
// declares a root concept).
class OntologyTaxonomy {
public:
    static OntologyTaxonomy load_file(const std::string& path);  // throws ConfigError

    // Edge list constructor for tests/embedding. Throws ConfigError on a
    // duplicate child or a cycle.
    static OntologyTaxonomy from_edges(
        const std::vector<std::pair<std::string, std::string>>& child_parent_edges);

    bool contains(const std::string& concept_uri) const;

    // Number of isA edges from `descendant` up to `ancestor`; 0 when equal,
    // -1 when `ancestor` is not reachable.
    int subsumption_distance(const std::string& descendant, const std::string& ancestor) const;

    std::size_t concept_count() const { return parent_.size(); }

private:
    // child -> parent; roots map to an empty optional
    std::map<std::string, std::optional<std::string>> parent_;
};

// ---------------------------------------------------------------------------
// Built-in matchers

// "token-cosine": lowercases, splits on non-alphanumerics, and takes the
// cosine similarity of the token-count vectors. Two empty token sets → 0.
class TokenCosineTextMatcher final : public TextMatcher {
public:
    double similarity(const std::string& a, const std::string& b) const override;
};

// "taxonomy-path": identical URIs → 1 (even outside the taxonomy); when one
// known concept subsumes the other, 1/(1 + path length); anything else
// (unknown concept, siblings) → 0. Symmetric over subsumption direction.
class TaxonomyPathOntologyMatcher final : public OntologyMatcher {
public:
    explicit TaxonomyPathOntologyMatcher(std::shared_ptr<const OntologyTaxonomy> taxonomy)
        : taxonomy_(std::move(taxonomy)) {}

    double similarity(const std::string& c1, const std::string& c2) const override;

private:
    std::shared_ptr<const OntologyTaxonomy> taxonomy_;
};

// Per-namespace datatype matcher: exact (namespace, localName) equality → 1;
// a (requested → advertised) pair in the promotion table → 0.8 (safe
// widening is directional); everything else, including any cross-namespace
// pair, → 0.
class PromotionDatatypeMatcher final : public DatatypeMatcher {
public:
    PromotionDatatypeMatcher(std::string namespace_uri,
                             std::vector<std::pair<std::string, std::string>> promotions)
        : namespace_uri_(std::move(namespace_uri)), promotions_(std::move(promotions)) {}

    double match(const model::DataTypeRef& requested,
                 const model::DataTypeRef& advertised) const override;

    const std::string& namespace_uri() const { return namespace_uri_; }

private:
    std::string namespace_uri_;
    std::vector<std::pair<std::string, std::string>> promotions_;  // (from, to)
};

// Unit conversion table for the numeric QoS matchers: named units carry a
// dimension and a factor to that dimension's base unit. The empty unit is
// dimensionless and compatible with any dimension at factor 1.
class UnitTable {
public:
    static UnitTable load_file(const std::string& path);  // throws ConfigError

    void add(const std::string& unit, const std::string& dimension, double factor);

    // Brings both values to a common base. Throws UnitMismatch on an
    // unknown unit or incompatible dimensions.
    std::pair<double, double> normalize(const model::QoSValue& required,
                                        const model::QoSValue& advertised) const;

private:
    struct Row {
        std::string dimension;
        double factor = 1.0;
    };
    std::map<std::string, Row> rows_;
};

// Binary numeric matcher shared by the built-in QoS names: normalizes units
// and tests `advertised OP required`. EQ uses an absolute-relative hybrid
// tolerance of 1e-9 * max(1, |required|).
class NumericQoSMatcher final : public QoSMatcher {
public:
    explicit NumericQoSMatcher(std::shared_ptr<const UnitTable> units)
        : units_(std::move(units)) {}

    double match(const model::ServiceRequirement& r,
                 const model::AdvertisedProperty& p) const override;

private:
    std::shared_ptr<const UnitTable> units_;
};

// ---------------------------------------------------------------------------
// Wiring

// Registers the built-in matchers: the token-cosine text matcher, the
// taxonomy-path ontology matcher over `taxonomy`, one datatype matcher per
// namespace found in `<data_dir>/datatype-promotions.tsv`, and the numeric
// QoS matchers ("ResponseTime", "Availability", "Reliability", "Throughput")
// over `<data_dir>/qos-units.tsv`.
void register_builtin_matchers(Registry& registry, const std::string& data_dir,
                               std::shared_ptr<const OntologyTaxonomy> taxonomy);

// Keys used when assembling a matcher suite from a registry.
struct MatcherSelection {
    std::string text = "token-cosine";
    std::string ontology = "taxonomy-path";
};

// Builds the algebra-facing suite from registry selections. The datatype
// arm dispatches on the requested namespace (no matcher registered for it →
// 0). QoS matchers are wrapped so a UnitMismatch scores 0 instead of
// faulting the whole query; the error is still thrown by the plugin itself
// when called directly.
algebra::MatcherSuite make_matcher_suite(const Registry& registry,
                                         const MatcherSelection& selection = {});

}  // namespace proteus::plugins

#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace proteus::xml {

// Minimal XML document model backing the USQL codecs and the description
// parsers. Attributes keep document order; whitespace-only character data
// between elements is dropped; remaining text is edge-trimmed per element.
struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<Element> children;
    std::string text;

    const std::string* find_attribute(std::string_view attr_name) const;
    const Element* find_child(std::string_view child_name) const;
    std::vector<const Element*> children_named(std::string_view child_name) const;

    Element& add_child(std::string child_name);
    void set_attribute(std::string attr_name, std::string value);

    bool operator==(const Element&) const = default;
};

// Parses one standalone document: optional declaration, comments and
// processing instructions skipped, CDATA supported, the five predefined
// entities plus numeric character references expanded, attribute-value
// whitespace normalized, line ends normalized. Throws SyntaxError with a
// line:column prefix on anything malformed (including duplicate attributes
// and trailing content after the root element).
Element parse_document(std::string_view bytes);

// Canonical serialization: fixed declaration line, two-space indent, LF line
// ends, attributes in stored order, text-only elements on one line, empty
// elements self-closed, trailing newline. Control characters in attribute
// values are emitted as numeric references so parsing is lossless.
std::string serialize_document(const Element& root);

std::string escape_text(std::string_view raw);
std::string escape_attribute(std::string_view raw);

}  // namespace proteus::xml

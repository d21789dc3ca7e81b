#include "proteus/xml.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "proteus/errors.hpp"

namespace proteus::xml {

namespace {

bool is_name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':';
}

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' ||
           c == '-' || c == '.';
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

class Parser {
public:
    explicit Parser(std::string_view input) : in_(input) {
        // Line-end normalization up front; a stray CR can then only come
        // from a numeric reference, which must survive round trips.
        normalized_.reserve(in_.size());
        for (std::size_t i = 0; i < in_.size(); ++i) {
            if (in_[i] == '\r') {
                normalized_.push_back('\n');
                if (i + 1 < in_.size() && in_[i + 1] == '\n') ++i;
            } else {
                normalized_.push_back(in_[i]);
            }
        }
        in_ = normalized_;
        if (in_.size() >= 3 && in_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
    }

    Element parse() {
        skip_prolog();
        if (eof() || peek() != '<') fail("expected root element");
        Element root = parse_element();
        skip_misc();
        if (!eof()) fail("content after root element");
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& message) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < pos_ && i < in_.size(); ++i) {
            if (in_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream os;
        os << line << ":" << col << ": " << message;
        throw SyntaxError(os.str());
    }

    bool eof() const { return pos_ >= in_.size(); }
    char peek() const { return in_[pos_]; }
    bool starts_with(std::string_view s) const { return in_.substr(pos_, s.size()) == s; }

    void expect(std::string_view s) {
        if (!starts_with(s)) fail("expected '" + std::string(s) + "'");
        pos_ += s.size();
    }

    void skip_ws() {
        while (!eof() && is_space(peek())) ++pos_;
    }

    void skip_comment() {
        expect("<!--");
        auto end = in_.find("-->", pos_);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 3;
    }

    void skip_pi() {
        expect("<?");
        auto end = in_.find("?>", pos_);
        if (end == std::string_view::npos) fail("unterminated processing instruction");
        pos_ = end + 2;
    }

    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<!--")) {
                skip_comment();
            } else if (starts_with("<?")) {
                skip_pi();
            } else {
                return;
            }
        }
    }

    void skip_prolog() {
        skip_ws();
        if (starts_with("<?xml")) skip_pi();
        skip_misc();
        if (starts_with("<!DOCTYPE")) fail("DOCTYPE is not supported");
    }

    std::string parse_name() {
        if (eof() || !is_name_start(peek())) fail("expected a name");
        std::size_t start = pos_;
        while (!eof() && is_name_char(peek())) ++pos_;
        return std::string(in_.substr(start, pos_ - start));
    }

    // Expands one reference; pos_ sits just past the '&'.
    void parse_reference(std::string& out) {
        auto end = in_.find(';', pos_);
        if (end == std::string_view::npos || end - pos_ > 12) fail("malformed entity reference");
        std::string_view body = in_.substr(pos_, end - pos_);
        pos_ = end + 1;
        if (body == "amp") {
            out += '&';
        } else if (body == "lt") {
            out += '<';
        } else if (body == "gt") {
            out += '>';
        } else if (body == "apos") {
            out += '\'';
        } else if (body == "quot") {
            out += '"';
        } else if (!body.empty() && body[0] == '#') {
            long code = -1;
            try {
                code = (body.size() > 1 && (body[1] == 'x' || body[1] == 'X'))
                           ? std::stol(std::string(body.substr(2)), nullptr, 16)
                           : std::stol(std::string(body.substr(1)), nullptr, 10);
            } catch (const std::exception&) {
                fail("malformed character reference");
            }
            if (code < 0 || code > 0x10FFFF) fail("character reference out of range");
            append_utf8(out, static_cast<unsigned long>(code));
        } else {
            fail("unknown entity '&" + std::string(body) + ";'");
        }
    }

    static void append_utf8(std::string& out, unsigned long cp) {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }

    std::string parse_attribute_value() {
        if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
        char quote = peek();
        ++pos_;
        std::string value;
        for (;;) {
            if (eof()) fail("unterminated attribute value");
            char c = peek();
            if (c == quote) {
                ++pos_;
                return value;
            }
            if (c == '<') fail("'<' in attribute value");
            if (c == '&') {
                ++pos_;
                parse_reference(value);
            } else {
                // Attribute-value normalization.
                value += (c == '\t' || c == '\n') ? ' ' : c;
                ++pos_;
            }
        }
    }

    Element parse_element() {
        expect("<");
        Element element;
        element.name = parse_name();
        for (;;) {
            bool had_space = !eof() && is_space(peek());
            skip_ws();
            if (eof()) fail("unterminated start tag");
            if (starts_with("/>")) {
                pos_ += 2;
                return element;
            }
            if (peek() == '>') {
                ++pos_;
                parse_content(element);
                return element;
            }
            if (!had_space) fail("expected whitespace before attribute");
            std::string attr_name = parse_name();
            for (const auto& [existing, _] : element.attributes) {
                if (existing == attr_name) fail("duplicate attribute '" + attr_name + "'");
            }
            skip_ws();
            expect("=");
            skip_ws();
            element.attributes.emplace_back(std::move(attr_name), parse_attribute_value());
        }
    }

    void parse_content(Element& element) {
        std::string text;
        for (;;) {
            if (eof()) fail("unterminated element '" + element.name + "'");
            char c = peek();
            if (c == '<') {
                if (starts_with("</")) {
                    pos_ += 2;
                    std::string closing = parse_name();
                    if (closing != element.name) {
                        fail("mismatched closing tag '" + closing + "' for '" + element.name + "'");
                    }
                    skip_ws();
                    expect(">");
                    finish_text(element, text);
                    return;
                }
                if (starts_with("<!--")) {
                    skip_comment();
                } else if (starts_with("<![CDATA[")) {
                    pos_ += 9;
                    auto end = in_.find("]]>", pos_);
                    if (end == std::string_view::npos) fail("unterminated CDATA section");
                    text.append(in_.substr(pos_, end - pos_));
                    pos_ = end + 3;
                } else if (starts_with("<?")) {
                    skip_pi();
                } else {
                    element.children.push_back(parse_element());
                }
            } else if (c == '&') {
                ++pos_;
                parse_reference(text);
            } else {
                text += c;
                ++pos_;
            }
        }
    }

    static void finish_text(Element& element, std::string& text) {
        auto begin = text.find_first_not_of(" \t\n");
        if (begin == std::string::npos) return;
        auto end = text.find_last_not_of(" \t\n");
        element.text = text.substr(begin, end - begin + 1);
    }

    std::string_view in_;
    std::string normalized_;
    std::size_t pos_ = 0;
};

void write_indent(std::string& out, int depth) {
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
}

void write_element(std::string& out, const Element& element, int depth) {
    if (!element.text.empty() && !element.children.empty()) {
        throw std::logic_error("mixed element content is not serializable: " + element.name);
    }
    write_indent(out, depth);
    out += '<';
    out += element.name;
    for (const auto& [name, value] : element.attributes) {
        out += ' ';
        out += name;
        out += "=\"";
        out += escape_attribute(value);
        out += '"';
    }
    if (element.children.empty() && element.text.empty()) {
        out += "/>\n";
        return;
    }
    out += '>';
    if (element.children.empty()) {
        out += escape_text(element.text);
    } else {
        out += '\n';
        for (const Element& child : element.children) write_element(out, child, depth + 1);
        write_indent(out, depth);
    }
    out += "</";
    out += element.name;
    out += ">\n";
}

}  // namespace

const std::string* Element::find_attribute(std::string_view attr_name) const {
    for (const auto& [name, value] : attributes) {
        if (name == attr_name) return &value;
    }
    return nullptr;
}

const Element* Element::find_child(std::string_view child_name) const {
    for (const Element& child : children) {
        if (child.name == child_name) return &child;
    }
    return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view child_name) const {
    std::vector<const Element*> out;
    for (const Element& child : children) {
        if (child.name == child_name) out.push_back(&child);
    }
    return out;
}

Element& Element::add_child(std::string child_name) {
    children.push_back(Element{std::move(child_name), {}, {}, {}});
    return children.back();
}

void Element::set_attribute(std::string attr_name, std::string value) {
    attributes.emplace_back(std::move(attr_name), std::move(value));
}

Element parse_document(std::string_view bytes) {
    return Parser(bytes).parse();
}

std::string serialize_document(const Element& root) {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    write_element(out, root, 0);
    return out;
}

std::string escape_text(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '\r': out += "&#13;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string escape_attribute(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\t': out += "&#9;"; break;
            case '\n': out += "&#10;"; break;
            case '\r': out += "&#13;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace proteus::xml

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "proteus/model.hpp"

namespace proteus::model {

enum class ParseMode {
    Strict,   // unknown elements/attributes are SchemaErrors
    Lenient,  // unknown elements/attributes are collected as warnings
};

struct ParsedRequest {
    USQLRequest request;
    std::vector<std::string> warnings;  // only populated in lenient mode
};

// USQLRequest document codec. parse throws SyntaxError for malformed XML and
// SchemaError (naming the element path) for invariant violations; serialize
// emits the canonical form: fixed attribute order, decimals with six
// fractional digits, defaults materialized.
ParsedRequest parse_request(std::string_view xml_bytes, ParseMode mode = ParseMode::Strict);
std::string serialize_request(const USQLRequest& request);

// USQLResponse document codec; response invariants are checked upstream.
USQLResponse parse_response(std::string_view xml_bytes);
std::string serialize_response(const USQLResponse& response);

// Query fault document, the error face of the engine.
struct Fault {
    std::string request_id;
    std::string code;
    std::string message;

    bool operator==(const Fault&) const = default;
};

std::string serialize_fault(const Fault& fault);
Fault parse_fault(std::string_view xml_bytes);

// "%.6f", the canonical decimal form used across USQL documents.
std::string format_decimal(double value);

}  // namespace proteus::model

#pragma once

// One-line JSON codec for ServiceAdvertisement records.  The repository's
// store file holds one encoded advertisement per line, so the encoder must
// never emit embedded newlines and must round-trip doubles exactly.

#include <string>
#include <string_view>

#include "proteus/model.hpp"

namespace proteus::model {

// Encodes to a single line of JSON (no trailing newline).  Key order is
// fixed so that identical advertisements always encode to identical bytes.
std::string encode_advertisement(const ServiceAdvertisement& ad);

// Decodes one line.  `line_number` (1-based) is used in error messages;
// throws DecodeError on malformed JSON or a record that fails validation.
ServiceAdvertisement decode_advertisement(std::string_view line, std::size_t line_number = 0);

}  // namespace proteus::model

#pragma once

#include <stdexcept>
#include <string>

namespace proteus {

// Base of the engine's error hierarchy. Every error carries a stable code
// string; the CLI and HTTP faces embed it in fault documents.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define PROTEUS_ERROR(Name)                                                    \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& message) : Error(#Name, message) {}   \
    }

// Document codecs
PROTEUS_ERROR(SyntaxError);
PROTEUS_ERROR(SchemaError);
PROTEUS_ERROR(DecodeError);

// Algebra
PROTEUS_ERROR(EmptyRequirements);
PROTEUS_ERROR(NonPositiveWeight);
PROTEUS_ERROR(UnknownQoSName);
PROTEUS_ERROR(UnitMismatch);

// Plugin registry
PROTEUS_ERROR(DuplicatePlugin);
PROTEUS_ERROR(PluginNotFound);

// Crawler
PROTEUS_ERROR(BrokerUnreachable);
PROTEUS_ERROR(AccessDenied);
PROTEUS_ERROR(ParseError);

// Repository / query processor
PROTEUS_ERROR(StorageError);
PROTEUS_ERROR(UnknownFilterName);
PROTEUS_ERROR(UnknownTarget);
PROTEUS_ERROR(NotFound);

// Configuration
PROTEUS_ERROR(ConfigError);

#undef PROTEUS_ERROR

}  // namespace proteus

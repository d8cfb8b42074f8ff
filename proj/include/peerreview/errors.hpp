#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace peerreview {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed XML or other unparseable input. Carries the byte offset where the
/// underlying parser gave up.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : Error(what + " (at byte " + std::to_string(byte_offset) + ")"), offset_(byte_offset) {}

    std::size_t byte_offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Well-formed input that does not match the expected record/schema shape.
class SchemaError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

/// Graph file decoding failure; line numbers are 1-based.
class DecodeError : public Error {
public:
    DecodeError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SolicitationError : public Error {
public:
    using Error::Error;
};

class AuthorizationError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// Failure while harvesting from an upstream repository. `protocol_code` is
/// the upstream's OAI error code (e.g. "badArgument") when the failure was
/// reported in-band, empty for transport failures.
class HarvestError : public Error {
public:
    HarvestError(const std::string& what, std::string protocol_code = {})
        : Error(what), code_(std::move(protocol_code)) {}

    const std::string& protocol_code() const noexcept { return code_; }

private:
    std::string code_;
};

class InternalError : public Error {
public:
    using Error::Error;
};

} // namespace peerreview

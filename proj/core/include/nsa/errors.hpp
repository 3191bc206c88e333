#pragma once

#include <stdexcept>
#include <string>

namespace nsa {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Corpus / template layer.
struct ParseError : Error {
    using Error::Error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct TemplateError : Error {
    using Error::Error;
};

// Transport layer.
struct TransportError : Error {
    using Error::Error;
};
struct AuthError : Error {
    using Error::Error;
};
struct RateLimitExceeded : TransportError {
    using TransportError::TransportError;
};
struct PartialRunError : Error {
    explicit PartialRunError(const std::string& msg, std::size_t failed_keys)
        : Error(msg), failed_keys(failed_keys) {}
    std::size_t failed_keys = 0;
};

// Metrics layer.
struct EmptyCell : Error {
    using Error::Error;
};
struct MissingFraming : Error {
    using Error::Error;
};
struct NoOverlap : Error {
    using Error::Error;
};
struct ModelMismatch : Error {
    using Error::Error;
};

// Statistics layer.
struct NoVariation : Error {
    using Error::Error;
};
struct ShapeError : Error {
    using Error::Error;
};
struct DegenerateInput : Error {
    using Error::Error;
};
struct RangeError : Error {
    using Error::Error;
};

// Certification / reporting layer.
struct UnknownDomain : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

}  // namespace nsa

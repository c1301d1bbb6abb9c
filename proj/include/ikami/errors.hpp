#pragma once

#include <stdexcept>
#include <string>

namespace ikami {

// Base for all errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input files (triples, links, word vectors, config JSON).
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration or precondition violation by the caller.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// NaN/Inf surfaced in a numeric computation.
struct NonFiniteError : Error {
    explicit NonFiniteError(const std::string& msg) : Error(msg) {}
};

}  // namespace ikami

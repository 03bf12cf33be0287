#pragma once

#include <stdexcept>
#include <string>

namespace simbridge {

// Base class for all errors raised by the library. The CLI maps the
// subclasses to stable exit codes (input 2, divergence 3, I/O 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: bad JSON/OBJ/XML, schema violations, range errors.
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally valid input that breaks a domain invariant
// (duplicate ids, non-watertight mesh, mass <= 0, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// NaN detected in an integrated state; names the offending body.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& body, const std::string& what)
        : Error(what), body_(body) {}
    const std::string& body() const { return body_; }

private:
    std::string body_;
};

} // namespace simbridge

#pragma once

#include <stdexcept>
#include <string>

namespace dyncomp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Model evaluated outside its validity region (e.g. body forward-biased past 2phi_F).
class DomainError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Leading-side overdrive is not positive, so the ramp-time formula has no finite value.
class DegenerateOverdriveError : public Error {
public:
    using Error::Error;
};

/// Neither preamplifier output reached the latch threshold within the comparison window.
class NoDecisionError : public Error {
public:
    using Error::Error;
};

/// The decision did not flip anywhere inside the offset search span.
class SpanError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// A configuration value violates a physical invariant; `key()` names it.
class RangeError : public Error {
public:
    RangeError(std::string key, const std::string& what)
        : Error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace dyncomp

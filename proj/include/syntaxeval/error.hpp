#pragma once

#include <stdexcept>
#include <string>

namespace syntaxeval {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error {
    using Error::Error;
};

// malformed input: bad JSON, missing fields, bad config values
struct FormatError : Error {
    using Error::Error;
};

struct MaskingError : Error {
    using Error::Error;
};

// transport failure after all retries, non-200, unreadable body
struct BackendError : Error {
    BackendError(const std::string& what, int attempts_) : Error(what), attempts(attempts_) {}
    int attempts = 0;
};

// a well-formed response that breaks the fill-mask contract
struct ProtocolError : Error {
    using Error::Error;
};

}  // namespace syntaxeval

#pragma once

#include <stdexcept>
#include <string>

namespace curvedress {

/// Malformed or inconsistent input data. CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// CSV-level validation failure; message carries file/row context.
struct CsvError : ValidationError {
    explicit CsvError(const std::string& msg) : ValidationError(msg) {}
};

/// Bid and ask curves share no volume interval.
struct DisjointDomainsError : ValidationError {
    explicit DisjointDomainsError(const std::string& msg) : ValidationError(msg) {}
};

/// Not enough past observations for the requested fit. CLI exit code 3.
struct InsufficientHistoryError : std::runtime_error {
    explicit InsufficientHistoryError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad invocation (flags, paths, overwrite without --force). CLI exit code 1.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace curvedress

#pragma once

#include <stdexcept>
#include <string>

namespace cwan {

// Bad or unreadable input data: files, manifests, mismatched checkpoints.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure during optimization (non-finite loss or gradient).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cwan

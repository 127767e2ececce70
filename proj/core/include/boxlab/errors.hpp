#pragma once

#include <stdexcept>
#include <string>

namespace boxlab {

/// File could not be opened, read or written.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File opened fine but its contents do not conform to the expected format.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// In-memory object violates a type invariant.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace boxlab

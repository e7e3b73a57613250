#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace loopvm {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised by the parser on malformed input; carries the 1-based source line.
struct SyntaxError : Error {
    int line;
    SyntaxError(int line, const std::string& msg)
        : Error("line " + std::to_string(line) + ": " + msg), line(line) {}
};

// Raised when a structurally parsed module violates the IR type invariants.
struct ValidationError : Error {
    std::vector<std::string> violations;
    explicit ValidationError(std::vector<std::string> v)
        : Error(v.empty() ? "validation failed" : v.front()), violations(std::move(v)) {}
};

// Raised at execution time for conditions the IR defines as traps.
struct TrapError : Error {
    enum class Kind { DivideByZero, CallDepthExceeded, BadInvocation };
    Kind kind;
    TrapError(Kind kind, const std::string& msg) : Error("trap: " + msg), kind(kind) {}
};

// Raised for conditions that indicate a bug in analysis or extraction,
// never for user input errors.
struct InternalError : Error {
    explicit InternalError(const std::string& msg) : Error("internal error: " + msg) {}
};

} // namespace loopvm

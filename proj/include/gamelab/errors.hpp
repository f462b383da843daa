#ifndef GAMELAB_ERRORS_HPP
#define GAMELAB_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gamelab {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised by the expression parser; carries the byte offset of the problem.
struct ParseError : Error {
    ParseError(std::string msg, std::size_t offset)
        : Error(msg + " (at byte " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::size_t byte_offset;
};

// Raised when an expression evaluates to a non-finite value or reads an
// unbound variable.
struct EvalError : Error {
    using Error::Error;
};

// Model/experiment configuration problems (missing fields, bad dimensions).
struct ConfigError : Error {
    using Error::Error;
};

// Numerical-scheme failures: CFL violations, degenerate grids, non-finite
// values detected mid-sweep.
struct SolverError : Error {
    using Error::Error;
};

// Out-of-domain queries and argument-range violations.
struct DomainError : Error {
    using Error::Error;
};

// Path simulation failures (non-finite state, propagated eval faults).
struct SimulationError : Error {
    using Error::Error;
};

}  // namespace gamelab

#endif

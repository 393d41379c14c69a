#pragma once

#include <stdexcept>
#include <string>

namespace dne {

/// Coarse failure category. The CLI maps each one to an exit code.
enum class ErrorKind {
    Parse,       ///< malformed input text
    Data,        ///< well-formed input that violates an invariant
    Config,      ///< bad configuration (e.g. u0 <= 2/3)
    Infeasible,  ///< the optimization model has no feasible point
    Numerical,   ///< the backend hit a numerical limit
    Capability,  ///< backend lacks a required cone type
    Io,          ///< file system trouble
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace dne

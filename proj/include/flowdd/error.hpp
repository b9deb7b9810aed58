#pragma once

#include <stdexcept>
#include <string>

namespace flowdd {

enum class ErrorKind {
    Parameter,   // argument outside its admissible range
    Extent,      // coordinate or grid outside the geometry / window
    Invariant,   // input violates a data invariant (e.g. negative SDF)
    Model,       // CNN shape or topology mismatch
    Numeric,     // non-finite values, solver breakdown
    Geometry,    // channel closure and similar geometric failures
    Config,      // missing or inconsistent configuration
    Io,          // file system and format errors
    Solver,      // subdomain solver failure inside the Schwarz loop
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace flowdd

#pragma once

#include <stdexcept>
#include <string>

namespace entanglab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed inputs: config files, spectrum tables, parameter ranges.
class ConfigError : public Error {
public:
    using Error::Error;
};

// The numerics refused to produce a trustworthy answer (degeneracy, no
// convergence, vanishing normalizers, infeasible constraints).
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace entanglab

#ifndef CIRREGIME_ERRORS_HPP
#define CIRREGIME_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cirregime {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed inputs: non-square matrices, size mismatches, non-finite
/// entries. Distinct from a model merely failing a named condition.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// A caller violated an operation's precondition.
class ContractError : public Error {
public:
    using Error::Error;
};

/// An iterative routine failed to converge; carries the last iterate.
class NumericError : public Error {
public:
    NumericError(const std::string& what, double last_iterate)
        : Error(what), last_iterate(last_iterate) {}
    double last_iterate;
};

/// Numerics contradict a structural guarantee (e.g. a root bracket that
/// theory says must contain a sign change does not).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// The regime chain is numerically degenerate (rank deficiency beyond the
/// expected one-dimensional null space).
class DegenerateChainError : public Error {
public:
    using Error::Error;
};

/// The model itself is unusable for the requested operation (e.g. an
/// absorbing regime encountered while sampling).
class ModelError : public Error {
public:
    using Error::Error;
};

} // namespace cirregime

#endif

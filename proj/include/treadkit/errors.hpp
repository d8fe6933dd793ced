#pragma once

#include <stdexcept>
#include <string>

namespace treadkit {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller passed a value outside an operation's contract (bad sigma, even window, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Input is well-formed but the operation is undefined on it (empty mask).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Input data is unusable: unreadable files, non-finite depth, missing foreground.
class DataError : public Error {
public:
    using Error::Error;
};

/// A linear system could not be solved reliably.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double condition)
        : Error(what), condition_(condition) {}

    /// Estimated condition number of the rejected system (inf when singular).
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

} // namespace treadkit

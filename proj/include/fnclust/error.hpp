#pragma once

#include <stdexcept>
#include <string>

namespace fnclust {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Iterative solver failed to converge; carries the last residual.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Integration blew up or the step size underflowed.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, double time)
        : Error(what + " at t=" + std::to_string(time)), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Malformed binary or text file; carries the byte offset where parsing stopped.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// Non-finite values during training; names the epoch/batch or layer.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace fnclust

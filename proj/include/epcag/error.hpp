#pragma once

#include <stdexcept>
#include <string>

namespace epcag {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// A query time fell outside the finite window a grid or path was built over.
class OutOfWindow : public Error {
public:
    using Error::Error;
};

class IntegrationFailure : public Error {
public:
    using Error::Error;
};

/// Raised when the state norm crosses the overflow guard during integration.
class BlowUp : public IntegrationFailure {
public:
    BlowUp(const std::string& what, double time) : IntegrationFailure(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Text position: 1-based line and column.
struct SourceLocation {
    int line = 1;
    int column = 1;
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, SourceLocation where)
        : Error(std::to_string(where.line) + ":" + std::to_string(where.column) + ": " + message),
          where_(where) {}
    SourceLocation where() const noexcept { return where_; }

private:
    SourceLocation where_;
};

/// Domain error while evaluating an expression (log of non-positive, division by zero).
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& message, SourceLocation where)
        : Error(std::to_string(where.line) + ":" + std::to_string(where.column) + ": " + message),
          where_(where) {}
    SourceLocation where() const noexcept { return where_; }

private:
    SourceLocation where_;
};

class NoDichotomy : public Error {
public:
    using Error::Error;
};

class UnsupportedSystem : public Error {
public:
    using Error::Error;
};

/// A hypothesis required by an operation does not hold (e.g. f(t,0,0) != 0 for the manifold engine).
class ConditionViolation : public Error {
public:
    using Error::Error;
};

class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(const std::string& what, int iterations, double last_ratio)
        : Error(what), iterations_(iterations), last_ratio_(last_ratio) {}
    int iterations() const noexcept { return iterations_; }
    double last_ratio() const noexcept { return last_ratio_; }

private:
    int iterations_;
    double last_ratio_;
};

}  // namespace epcag

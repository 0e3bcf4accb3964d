#pragma once

#include <stdexcept>
#include <string>

namespace blochkit {

// Error hierarchy. Input problems derive from std::invalid_argument, numerical
// failures from std::runtime_error so callers can map them to exit codes.

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DegenerateLattice : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EvaluationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Carries the accuracy that was actually achieved.
class AccuracyError : public NumericalError {
public:
    AccuracyError(const std::string& what, double achieved)
        : NumericalError(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

class IntegrationFailure : public NumericalError {
public:
    IntegrationFailure(const std::string& what, double location)
        : NumericalError(what), location_(location) {}
    double location() const noexcept { return location_; }

private:
    double location_;
};

class FormExtractionError : public NumericalError {
public:
    FormExtractionError(const std::string& what, double deviation)
        : NumericalError(what), deviation_(deviation) {}
    double deviation() const noexcept { return deviation_; }

private:
    double deviation_;
};

class ResolutionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotExpandable : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class TruncationError : public NumericalError {
public:
    TruncationError(const std::string& what, double bound)
        : NumericalError(what), bound_(bound) {}
    double bound() const noexcept { return bound_; }

private:
    double bound_;
};

}  // namespace blochkit

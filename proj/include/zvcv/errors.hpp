#pragma once

#include <stdexcept>
#include <string>

namespace zvcv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input and configuration problems. The CLI maps these to exit code 2.
class InvalidInput : public Error { using Error::Error; };
class InsufficientSamples : public InvalidInput { using InvalidInput::InvalidInput; };
class DomainError : public InvalidInput { using InvalidInput::InvalidInput; };
class BasisTooLarge : public InvalidInput { using InvalidInput::InvalidInput; };
class InvalidSchedule : public InvalidInput { using InvalidInput::InvalidInput; };
class ConfigError : public InvalidInput { using InvalidInput::InvalidInput; };

// Numerical failures. Exit code 3.
class NumericError : public Error { using Error::Error; };
class ConditioningError : public NumericError { using NumericError::NumericError; };
class DegenerateWeights : public NumericError { using NumericError::NumericError; };

class ConvergenceError : public NumericError {
public:
    ConvergenceError(const std::string& what, int iterations, double last_change)
        : NumericError(what), iterations_(iterations), last_change_(last_change) {}
    int iterations() const noexcept { return iterations_; }
    double last_change() const noexcept { return last_change_; }

private:
    int iterations_;
    double last_change_;
};

// File and stream problems. Exit code 4.
class IoError : public Error { using Error::Error; };

}  // namespace zvcv

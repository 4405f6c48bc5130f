#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kinetic {

/// Root of every error raised by the library. The CLI maps subclasses onto
/// exit codes (configuration 1, numerical 2, I/O 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public ConfigError {
public:
    ParseError(const std::string& msg, int line)
        : ConfigError("line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

class ValidationError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// Raised when the field develops values below the round-off floor.
class NumericalAbort : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
public:
    NoConvergence(const std::string& msg, std::vector<double> increments)
        : NumericalError(msg), increments_(std::move(increments)) {}
    const std::vector<double>& increments() const noexcept { return increments_; }

private:
    std::vector<double> increments_;
};

class DomainExit : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ZeroWeight : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class GridMismatch : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotBlownUp : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Evolution was requested past the first crossing of Burgers characteristics.
class BlowUp : public NumericalError {
public:
    BlowUp(double t_lo, double t_hi)
        : NumericalError("characteristics crossed in [" + std::to_string(t_lo) + ", " +
                         std::to_string(t_hi) + "]"),
          t_lo_(t_lo), t_hi_(t_hi) {}
    double t_lo() const noexcept { return t_lo_; }
    double t_hi() const noexcept { return t_hi_; }

private:
    double t_lo_, t_hi_;
};

class SupportClipped : public NumericalError {
public:
    SupportClipped(const std::string& msg, double clipped_mass)
        : NumericalError(msg), clipped_mass_(clipped_mass) {}
    double clipped_mass() const noexcept { return clipped_mass_; }

private:
    double clipped_mass_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace kinetic

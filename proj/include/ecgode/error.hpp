#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ecgode {

// Base of every error thrown by the library. The CLI maps the concrete
// subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Array lengths or sampling grids that do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Parameter outside the domain where a formula is defined (e.g. b below floor).
class DomainError : public Error {
public:
    using Error::Error;
};

// Missing lead parameters, missing class distribution, inconsistent rhythm.
class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DivergedError : public Error {
public:
    DivergedError(std::size_t step, const std::string& what)
        : Error("diverged at step " + std::to_string(step) + ": " + what), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class NoRhythmError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

}  // namespace ecgode

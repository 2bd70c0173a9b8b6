#pragma once

#include <stdexcept>
#include <string>

namespace contmeas {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BasisTooSmallError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Thrown when amplitude mass leaks past the safe part of the truncated basis.
// `time` is the simulation time when raised inside a trajectory, otherwise < 0.
class TruncationError : public Error {
public:
    explicit TruncationError(const std::string& msg, double when = -1.0)
        : Error(msg), time(when) {}
    double time;
};

class DegenerateOutcomeError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& msg, double when = -1.0)
        : Error(msg), time(when) {}
    double time;
};

class StepTooLargeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace contmeas

#pragma once

#include <stdexcept>
#include <string>

namespace hdsf {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent model or configuration (dimension mismatch, missing parameter, bad params).
class ConfigurationError : public Error {
  public:
    using Error::Error;
};

/// Non-finite value produced during integration.
class SimulationFault : public Error {
  public:
    SimulationFault(double time, std::string signal)
        : Error("non-finite value in signal '" + signal + "' at t=" + std::to_string(time)),
          time_(time), signal_(std::move(signal)) {}

    double time() const noexcept { return time_; }
    const std::string& signal() const noexcept { return signal_; }

  private:
    double time_;
    std::string signal_;
};

class ProjectionError : public Error {
  public:
    using Error::Error;
};

class CondensationError : public Error {
  public:
    using Error::Error;
};

class SolveError : public Error {
  public:
    using Error::Error;
};

/// A property refers to something the system does not know about.
class SpecificationError : public Error {
  public:
    using Error::Error;
};

class ReductionError : public Error {
  public:
    using Error::Error;
};

class EvaluationError : public Error {
  public:
    using Error::Error;
};

class ParseError : public Error {
  public:
    ParseError(const std::string& msg, std::size_t position)
        : Error(msg + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

  private:
    std::size_t position_;
};

/// Empty feasible region or malformed parameter space.
class SpaceError : public Error {
  public:
    using Error::Error;
};

class CampaignAborted : public Error {
  public:
    using Error::Error;
};

} // namespace hdsf

#pragma once

#include <stdexcept>
#include <string>

namespace pimspec {

// Base for every error raised by the simulator. The CLI maps ConfigError to
// exit status 1 and everything else to exit status 2.
class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration (unknown preset, non-positive rate,
// capacity overflow, empty sweep).
class ConfigError : public SimError {
public:
    using SimError::SimError;
};

// A caller broke an operation's precondition.
class ContractViolation : public SimError {
public:
    using SimError::SimError;
};

// DRAM/NMC protocol violation. `parameter()` names the timing constraint or
// protocol rule that was broken (e.g. "tRCD", "tCCD", "DQ").
class ProtocolError : public SimError {
public:
    ProtocolError(std::string parameter, const std::string& what)
        : SimError(what), parameter_(std::move(parameter)) {}

    const std::string& parameter() const noexcept { return parameter_; }

private:
    std::string parameter_;
};

class AddressError : public SimError {
public:
    using SimError::SimError;
};

class AllocationError : public SimError {
public:
    using SimError::SimError;
};

// A data invariant (e.g. probability mass > 1) does not hold.
class InvariantViolation : public SimError {
public:
    using SimError::SimError;
};

} // namespace pimspec

#pragma once

#include <stdexcept>
#include <string>

namespace chaomask {

// Two families, mirrored by the CLI exit codes: input errors (bad dimensions,
// bad configuration, schema violations) exit with 2, computation errors
// (divergence, infeasible synthesis) exit with 1.

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ComputationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public InputError {
public:
    using InputError::InputError;
};

class DomainError : public InputError {
public:
    using InputError::InputError;
};

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

class SchemaError : public InputError {
public:
    using InputError::InputError;
};

class IntegrationDiverged : public ComputationError {
public:
    IntegrationDiverged(const std::string& what, double time)
        : ComputationError(what + " (t = " + std::to_string(time) + " s)"), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

class NotBoundedError : public ComputationError {
public:
    using ComputationError::ComputationError;
};

class NoSolutionError : public ComputationError {
public:
    using ComputationError::ComputationError;
};

class NoStabilizingSolution : public ComputationError {
public:
    using ComputationError::ComputationError;
};

class SynthesisFailure : public ComputationError {
public:
    using ComputationError::ComputationError;
};

class InfeasibleSynthesis : public ComputationError {
public:
    InfeasibleSynthesis(const std::string& what, double best_margin)
        : ComputationError(what), best_margin_(best_margin) {}
    double best_margin() const noexcept { return best_margin_; }

private:
    double best_margin_;
};

class GainNotCertified : public ComputationError {
public:
    using ComputationError::ComputationError;
};

} // namespace chaomask

#pragma once

#include <stdexcept>
#include <string>

namespace slabfano {

// Base for every failure raised by the library. The CLI maps the subclasses
// onto exit codes, so keep the hierarchy shallow.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Numerical failures (exit code 3 in the CLI).
struct NumericalError : Error {
    using Error::Error;
};

// An order sits within the guard distance of sin^2(eta/2) in {0, 1}.
struct WoodAnomalyError : NumericalError {
    int order = 0;
    WoodAnomalyError(const std::string& what, int p) : NumericalError(what), order(p) {}
};

// omega^2 hits an isolated pendant resonance; V_eff has a pole there.
struct PendantPoleError : NumericalError {
    std::size_t pendant = 0;
    PendantPoleError(const std::string& what, std::size_t k) : NumericalError(what), pendant(k) {}
};

// A(kappa, omega) too close to singular for a stable solve.
struct SingularSystemError : NumericalError {
    double smallest_singular_value = 0.0;
    SingularSystemError(const std::string& what, double smin)
        : NumericalError(what), smallest_singular_value(smin) {}
};

struct BranchCollisionError : NumericalError {
    double margin = 0.0;
    BranchCollisionError(const std::string& what, double m) : NumericalError(what), margin(m) {}
};

struct ConvergenceError : NumericalError {
    using NumericalError::NumericalError;
};

// Point outside the one-propagating-order regime where a far field is needed.
struct RegimeError : NumericalError {
    using NumericalError::NumericalError;
};

// Im omega > 0 on a real-kappa branch: the model or the branch choice is broken.
struct SignViolationError : NumericalError {
    using NumericalError::NumericalError;
};

} // namespace slabfano

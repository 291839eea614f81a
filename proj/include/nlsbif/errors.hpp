#pragma once

#include <stdexcept>
#include <string>

namespace nlsbif {

enum class ErrorKind {
    invalid_argument,
    outside_fredholm_domain,
    no_convergence,
    near_bifurcation,
    numerical_failure,
    no_linear_bound_state,
    stalled,
    step_underflow,
    switch_failed,
    insufficient_range,
    unsupported,
    blow_up_detected,
    io_error,
};

inline const char* to_string(ErrorKind k)
{
    switch (k) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::outside_fredholm_domain: return "outside-Fredholm-domain";
    case ErrorKind::no_convergence: return "no-convergence";
    case ErrorKind::near_bifurcation: return "near-bifurcation";
    case ErrorKind::numerical_failure: return "numerical-failure";
    case ErrorKind::no_linear_bound_state: return "no-linear-bound-state";
    case ErrorKind::stalled: return "stalled";
    case ErrorKind::step_underflow: return "step-underflow";
    case ErrorKind::switch_failed: return "switch-failed";
    case ErrorKind::insufficient_range: return "insufficient-range";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::blow_up_detected: return "blow-up-detected";
    case ErrorKind::io_error: return "io-error";
    }
    return "unknown";
}

/// Every failure raised by the library carries one of the kinds above so that
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
{
    throw Error(kind, what);
}

inline void require(bool cond, const std::string& what)
{
    if (!cond) {
        fail(ErrorKind::invalid_argument, what);
    }
}

} // namespace nlsbif

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace barrier_solver {

enum class ErrorCode {
    // parameter validation
    IllPosed,
    NonPositiveVolatility,
    NonPositiveDrift,
    BadIntensity,
    // core_model
    DegenerateSpectrum,
    // exppoly
    Divergent,
    ResonanceEscalation,
    PreconditionViolated,
    // closed_form
    Lambda2Zero,
    NotApplicable,
    DegenerateDenominator,
    // recursion
    BracketFailure,
    NoConvergence,
    MonotonicityViolation,
    NumericalBreakdown,
    // configuration / io
    InvalidConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library. The code is
/// stable and machine-checkable; the message names the violated condition.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace barrier_solver

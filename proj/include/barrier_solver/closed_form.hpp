#pragma once

#include <variant>

#include "barrier_solver/exppoly.hpp"
#include "barrier_solver/model.hpp"

namespace barrier_solver {

/// Constants of the minimal-amount value function when lambda2 > 0:
/// V0(x, low) = B1 e^{-A1 x} + C1 e^{-A2 x},  V0(x, high) = B2 e^{-A1 x} + C2 e^{-A2 x}.
struct V0Constants {
    double a = 0.0;
    double alpha = 0.0;
    double D1 = 0.0;
    double D2 = 0.0;
    double A1 = 0.0;
    double A2 = 0.0;
    double E = 0.0;
    double F = 0.0;
    double B1 = 0.0;
    double B2 = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
};

/// lambda2 == 0: the high state decouples; vHigh = e^{-A x}/A.
struct V0ConstantsLambda2Zero {
    double A = 0.0;  // (mu + sqrt(mu^2 + 2 sigma^2 delta2)) / sigma^2
};

struct V0Result {
    PiecewiseExpPoly v_low;
    PiecewiseExpPoly v_high;
    std::variant<V0Constants, V0ConstantsLambda2Zero> constants;
    double d2_low_at_0 = 0.0;
    double d2_high_at_0 = 0.0;
    bool optimal_low = false;   // (V0)''(0, low) >= 0
    bool optimal_high = false;  // (V0)''(0, high) >= 0
    bool optimal = false;       // both
};

/// Throws Lambda2Zero when lambda2 == 0.
[[nodiscard]] V0Constants v0_constants(const ModelParams& p);

[[nodiscard]] V0Result v0(const ModelParams& p, const ExpPolyOptions& opts = {});

/// True iff (V0)'' at 0 is nonnegative in both states.
[[nodiscard]] bool v0_is_optimal(const ModelParams& p);

/// Explicit optimal barrier for lambda2 == 0, clamped at 0.
/// Throws NotApplicable (lambda2 != 0) or DegenerateDenominator (lambda1 + delta1 == delta2).
[[nodiscard]] double example_barrier_lambda2_zero(const ModelParams& p);

}  // namespace barrier_solver

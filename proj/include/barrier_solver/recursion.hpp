#pragma once

#include <vector>

#include "barrier_solver/exppoly.hpp"
#include "barrier_solver/model.hpp"

namespace barrier_solver {

/// Iterate V_n of the alternating scheme. Even n live in the high state
/// (barrier 0), odd n in the low state with barrier b_n.
struct RecursionState {
    int n = 0;
    PiecewiseExpPoly v;
    double barrier = 0.0;
    double sup_delta = 0.0;      // sup over the grid of |V_n - V_{n-2}|
    double barrier_delta = 0.0;  // |b_n - b_{n-2}|
    bool lambda2_fixed_point = false;  // even step with lambda2 == 0 reproduced V_0
};

struct IterationRecord {
    int n = 0;
    double barrier = 0.0;
    double sup_delta = 0.0;
    double barrier_delta = 0.0;
    double barrier_step = 0.0;   // b_n - b_{n-2}, signed
    double min_gap = 0.0;        // min over the grid of V_n - V_{n-2}
    double cancellation = 0.0;   // max sum |terms| / max |V_n|
    std::size_t terms = 0;
};

struct RecursionOptions {
    double tol = 1e-9;
    int max_iter = 200;
    double tol_b = 1e-10;
    double b_cap = 1e3;
    int grid_points = 2001;
    double x_max = 0.0;  // <= 0: chosen from the V0 tail
    double monotone_tol = 1e-10;
    double barrier_monotone_tol = 1e-12;
    // odd barriers are observed to increase with n when lambda2 > 0, so the
    // b_{n+2} <= b_n check is off unless asked for; history keeps the deltas
    bool enforce_barrier_monotonicity = false;
    double tol_hjb = 1e-7;
    // roundoff in V_n is taken as breakdown_factor * eps * max sum |terms|
    double breakdown_factor = 16.0;
    ExpPolyOptions exppoly;
};

struct StateResidual {
    double max_violation = 0.0;  // max |min(r1, r2)|
    double min_r1 = 0.0;
    double min_r2 = 0.0;
    double worst_x = 0.0;
};

struct HjbReport {
    StateResidual low;
    StateResidual high;
    double tol = 0.0;
    double max_violation = 0.0;
    bool passed = false;
};

struct Solution {
    PiecewiseExpPoly v_low;
    PiecewiseExpPoly v_high;
    double barrier = 0.0;
    int iterations = 0;
    double x_max = 0.0;
    bool lambda2_fixed_point = false;
    HjbReport residual_report;
    std::vector<IterationRecord> history;
};

/// Error raised by solve() that keeps the last iterate and the history.
class RecursionError : public Error {
public:
    RecursionError(ErrorCode code, const std::string& what, RecursionState last,
                   std::vector<IterationRecord> history)
        : Error(code, what), last_(std::move(last)), history_(std::move(history)) {}

    [[nodiscard]] const RecursionState& last_state() const noexcept { return last_; }
    [[nodiscard]] const std::vector<IterationRecord>& history() const noexcept { return history_; }

private:
    RecursionState last_;
    std::vector<IterationRecord> history_;
};

/// A priori difficulty of the iteration. contraction is the factor by which
/// ||V_{n+2} - V_n|| shrinks per double step when both barriers sit at 0;
/// growth is the factor by which coefficient cancellation grows per double
/// step (particular solutions divide by Q_low(-A_high) and Q_high(-A_low)).
/// growth well below 1 keeps the exact representation usable in binary64.
struct RecursionConditioning {
    double contraction = 0.0;  // lambda1 lambda2 / ((lambda1+delta1)(lambda2+delta2))
    double growth = 0.0;       // lambda1 lambda2 / |Q_low(-A_high) Q_high(-A_low)|
};

[[nodiscard]] RecursionConditioning recursion_conditioning(const ModelParams& p);

/// x_max with V0(x_max, low) < 1e-10 V0(0, low).
[[nodiscard]] double working_x_max(const ModelParams& p);
[[nodiscard]] std::vector<double> working_grid(double x_max, int points);

/// V_0 = e^{-A2 x}/A2 with A2 built from (lambda2, delta2).
[[nodiscard]] RecursionState v_initial(const ModelParams& p);

/// g'(b) = 1 + (2 lambda1/(sigma^2 A1)) (At1 int_b^inf v(y) e^{At1 (b-y)} dy - v(b)).
[[nodiscard]] double barrier_gradient(const PiecewiseExpPoly& v_even, double b,
                                      const ModelParams& p);

/// 0 if g'(0) >= 0, else the root of g' by doubling from 1/At1 and bisection.
[[nodiscard]] double find_barrier(const PiecewiseExpPoly& v_even, const ModelParams& p,
                                  double tol_b = 1e-10, double b_cap = 1e3);

[[nodiscard]] RecursionState step_odd(const RecursionState& s, const ModelParams& p,
                                      const RecursionOptions& opts = {});
[[nodiscard]] RecursionState step_even(const RecursionState& s, const ModelParams& p,
                                       const RecursionOptions& opts = {});

/// Iterates until both parities and the barrier settle. Throws RecursionError
/// with NoConvergence, MonotonicityViolation or NumericalBreakdown.
[[nodiscard]] Solution solve(const ModelParams& p, const RecursionOptions& opts = {});

/// r1 = (sigma^2/2) V_i'' + mu V_i' - (delta_i + lambda_i) V_i + lambda_i V_j,  r2 = V_i' + 1.
[[nodiscard]] HjbReport hjb_residual(const PiecewiseExpPoly& v_low, const PiecewiseExpPoly& v_high,
                                     const ModelParams& p, const std::vector<double>& grid,
                                     double tol_hjb = 1e-7);
[[nodiscard]] HjbReport hjb_residual(const Solution& sol, const ModelParams& p,
                                     const std::vector<double>& grid, double tol_hjb = 1e-7);

}  // namespace barrier_solver

#include "barrier_solver/closed_form.hpp"

#include <cmath>

namespace barrier_solver {

V0Constants v0_constants(const ModelParams& p) {
    require_valid(p);
    if (p.lambda2 == 0.0) {
        throw Error(ErrorCode::Lambda2Zero, "v0_constants needs lambda2 > 0");
    }
    V0Constants k;
    k.a = p.lambda1 + p.delta1 + p.lambda2 + p.delta2;
    k.alpha = p.lambda1 + p.delta1 - p.lambda2 - p.delta2;
    const double root = std::sqrt(k.alpha * k.alpha + 4.0 * p.lambda1 * p.lambda2);
    k.D2 = 0.5 * (k.a + root);
    // D1 D2 = (lambda1+delta1)(lambda2+delta2) - lambda1 lambda2, avoids cancellation in a - root
    k.D1 = ((p.lambda1 + p.delta1) * (p.lambda2 + p.delta2) - p.lambda1 * p.lambda2) / k.D2;
    if (!(k.D1 > 0.0)) {
        throw Error(ErrorCode::IllPosed, "D1 > 0 violated; the minimal-amount value is infinite");
    }
    const double s2 = p.sigma * p.sigma;
    k.A1 = (p.mu + std::sqrt(p.mu * p.mu + 2.0 * s2 * k.D1)) / s2;
    k.A2 = (p.mu + std::sqrt(p.mu * p.mu + 2.0 * s2 * k.D2)) / s2;
    k.E = (p.lambda2 + p.delta2 - k.D1) / p.lambda2;
    k.F = (p.lambda2 + p.delta2 - k.D2) / p.lambda2;
    k.B2 = (1.0 - k.F) / (k.A1 * (k.E - k.F));
    k.C2 = (k.E - 1.0) / (k.A2 * (k.E - k.F));
    k.B1 = k.E * k.B2;
    k.C1 = k.F * k.C2;
    return k;
}

V0Result v0(const ModelParams& p, const ExpPolyOptions& opts) {
    require_valid(p);
    V0Result r;
    if (p.lambda2 > 0.0) {
        const V0Constants k = v0_constants(p);
        r.v_low = PiecewiseExpPoly::single({{k.B1, 0, -k.A1}, {k.C1, 0, -k.A2}});
        r.v_high = PiecewiseExpPoly::single({{k.B2, 0, -k.A1}, {k.C2, 0, -k.A2}});
        r.constants = k;
    } else {
        const OdeCoeffs high = OdeCoeffs::make(p.mu, p.sigma, 0.0, p.delta2);
        r.v_high = PiecewiseExpPoly::single({{1.0 / high.A, 0, -high.A}});
        const OdeCoeffs low = OdeCoeffs::make(p.mu, p.sigma, p.lambda1, p.delta1);
        r.v_low = solve_barrier_ode(r.v_high, 0.0, low, opts);
        r.constants = V0ConstantsLambda2Zero{high.A};
    }
    r.d2_low_at_0 = r.v_low.eval(0.0, 2);
    r.d2_high_at_0 = r.v_high.eval(0.0, 2);
    r.optimal_low = r.d2_low_at_0 >= 0.0;
    r.optimal_high = r.d2_high_at_0 >= 0.0;
    r.optimal = r.optimal_low && r.optimal_high;
    return r;
}

bool v0_is_optimal(const ModelParams& p) { return v0(p).optimal; }

double example_barrier_lambda2_zero(const ModelParams& p) {
    require_valid(p);
    if (p.lambda2 != 0.0) {
        throw Error(ErrorCode::NotApplicable, "explicit barrier formula needs lambda2 == 0");
    }
    const double denom = p.lambda1 + p.delta1 - p.delta2;
    if (denom == 0.0) {
        throw Error(ErrorCode::DegenerateDenominator, "lambda1 + delta1 - delta2 == 0");
    }
    const double s2 = p.sigma * p.sigma;
    const double psi1 = std::sqrt(p.mu * p.mu + 2.0 * s2 * (p.delta1 + p.lambda1));
    const double psi2 = std::sqrt(p.mu * p.mu + 2.0 * s2 * p.delta2);
    const double A = (p.mu + psi2) / s2;
    const double arg = p.lambda1 / denom * (psi1 - psi2) / (p.mu + psi1);
    if (!(arg > 0.0)) {
        throw Error(ErrorCode::NotApplicable, "logarithm argument is not positive");
    }
    return std::max(0.0, std::log(arg) / A);
}

}  // namespace barrier_solver

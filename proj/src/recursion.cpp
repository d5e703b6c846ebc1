#include "barrier_solver/recursion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "barrier_solver/closed_form.hpp"

namespace barrier_solver {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

OdeCoeffs low_coeffs(const ModelParams& p) {
    return OdeCoeffs::make(p.mu, p.sigma, p.lambda1, p.delta1);
}

OdeCoeffs high_coeffs(const ModelParams& p) {
    return OdeCoeffs::make(p.mu, p.sigma, p.lambda2, p.delta2);
}

struct Sampled {
    std::vector<double> v;
    double max_abs = 0.0;
    double max_terms = 0.0;
};

Sampled sample(const PiecewiseExpPoly& f, const std::vector<double>& grid) {
    Sampled s;
    s.v.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        s.v[i] = f.eval(grid[i]);
        s.max_abs = std::max(s.max_abs, std::abs(s.v[i]));
        s.max_terms = std::max(s.max_terms, f.abs_term_sum(grid[i]));
    }
    return s;
}

StateResidual state_residual(const PiecewiseExpPoly& v, const PiecewiseExpPoly& other,
                             double delta, double lambda, const ModelParams& p,
                             const std::vector<double>& grid) {
    StateResidual r;
    r.min_r1 = std::numeric_limits<double>::infinity();
    r.min_r2 = std::numeric_limits<double>::infinity();
    const double s2 = 0.5 * p.sigma * p.sigma;
    for (double x : grid) {
        const double v0 = v.eval(x, 0);
        const double v1 = v.eval(x, 1);
        const double v2 = v.eval(x, 2);
        const double r1 = s2 * v2 + p.mu * v1 - (delta + lambda) * v0 + lambda * other.eval(x);
        const double r2 = v1 + 1.0;
        const double viol = std::abs(std::min(r1, r2));
        if (viol > r.max_violation) {
            r.max_violation = viol;
            r.worst_x = x;
        }
        r.min_r1 = std::min(r.min_r1, r1);
        r.min_r2 = std::min(r.min_r2, r2);
    }
    return r;
}

}  // namespace

RecursionConditioning recursion_conditioning(const ModelParams& p) {
    require_valid(p);
    RecursionConditioning c;
    c.contraction = p.lambda1 * p.lambda2 / ((p.lambda1 + p.delta1) * (p.lambda2 + p.delta2));
    if (p.lambda2 == 0.0) return c;
    const OdeCoeffs lo = low_coeffs(p);
    const OdeCoeffs hi = high_coeffs(p);
    const double s2 = 0.5 * p.sigma * p.sigma;
    const double q_low = s2 * (lo.A - hi.A) * (hi.A + lo.At);
    const double q_high = s2 * (hi.A - lo.A) * (lo.A + hi.At);
    c.growth = p.lambda1 * p.lambda2 / std::abs(q_low * q_high);
    return c;
}

double working_x_max(const ModelParams& p) {
    const PiecewiseExpPoly v = v0(p).v_low;
    const double target = 1e-10 * v.eval(0.0);
    double hi = 1.0;
    while (v.abs_term_sum(hi) >= target) {
        hi *= 2.0;
        if (hi > 1e6) throw Error(ErrorCode::NumericalBreakdown, "V0 tail does not decay");
    }
    double lo = hi / 2.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (v.abs_term_sum(mid) >= target ? lo : hi) = mid;
    }
    return hi;
}

std::vector<double> working_grid(double x_max, int points) {
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i) g[i] = x_max * i / (points - 1);
    return g;
}

RecursionState v_initial(const ModelParams& p) {
    require_valid(p);
    const OdeCoeffs k = high_coeffs(p);
    RecursionState s;
    s.n = 0;
    s.v = PiecewiseExpPoly::single({{1.0 / k.A, 0, -k.A}});
    return s;
}

double barrier_gradient(const PiecewiseExpPoly& v_even, double b, const ModelParams& p) {
    const OdeCoeffs k = low_coeffs(p);
    const double I = integrate_exp_tail(v_even, b, k.At);
    return 1.0 + 2.0 * p.lambda1 / (p.sigma * p.sigma * k.A) * (k.At * I - v_even.eval(b));
}

double find_barrier(const PiecewiseExpPoly& v_even, const ModelParams& p, double tol_b,
                    double b_cap) {
    if (barrier_gradient(v_even, 0.0, p) >= 0.0) return 0.0;
    const OdeCoeffs k = low_coeffs(p);
    double lo = 0.0;
    double hi = 1.0 / k.At;
    while (barrier_gradient(v_even, hi, p) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > b_cap) {
            throw Error(ErrorCode::BracketFailure,
                        "no sign change of the barrier gradient below " + fmt(b_cap));
        }
    }
    while (hi - lo > tol_b) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (barrier_gradient(v_even, mid, p) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

RecursionState step_odd(const RecursionState& s, const ModelParams& p,
                        const RecursionOptions& opts) {
    if (s.n % 2 != 0) throw Error(ErrorCode::PreconditionViolated, "step_odd needs an even iterate");
    RecursionState out;
    out.n = s.n + 1;
    out.barrier = find_barrier(s.v, p, opts.tol_b, opts.b_cap);
    out.v = solve_barrier_ode(s.v, out.barrier, low_coeffs(p), opts.exppoly);
    return out;
}

RecursionState step_even(const RecursionState& s, const ModelParams& p,
                         const RecursionOptions& opts) {
    if (s.n % 2 != 1) throw Error(ErrorCode::PreconditionViolated, "step_even needs an odd iterate");
    RecursionState out;
    out.n = s.n + 1;
    if (p.lambda2 == 0.0) {
        out.v = v_initial(p).v;
        out.lambda2_fixed_point = true;
    } else {
        out.v = solve_barrier_ode(s.v, 0.0, high_coeffs(p), opts.exppoly);
    }
    return out;
}

Solution solve(const ModelParams& p, const RecursionOptions& opts) {
    require_valid(p);
    if (!(opts.tol > 0.0) || opts.max_iter < 1 || opts.grid_points < 2) {
        throw Error(ErrorCode::InvalidConfig, "tol > 0, max_iter >= 1, grid_points >= 2 required");
    }
    Solution sol;
    sol.x_max = opts.x_max > 0.0 ? opts.x_max : working_x_max(p);
    const std::vector<double> grid = working_grid(sol.x_max, opts.grid_points);

    std::vector<RecursionState> last(2);   // latest iterate of each parity
    std::vector<Sampled> samples(2);
    std::vector<bool> have(2, false);

    RecursionState cur = v_initial(p);
    const double eps = std::numeric_limits<double>::epsilon();
    for (;;) {
        const int par = cur.n % 2;
        const Sampled sm = sample(cur.v, grid);
        IterationRecord rec;
        rec.n = cur.n;
        rec.barrier = cur.barrier;
        rec.terms = cur.v.term_count();
        rec.cancellation = sm.max_terms / std::max(sm.max_abs, 1e-300);
        if (opts.breakdown_factor * eps * sm.max_terms > 0.1 * std::min(opts.tol, opts.monotone_tol)) {
            sol.history.push_back(rec);
            throw RecursionError(ErrorCode::NumericalBreakdown,
                                 "cancellation in V_" + std::to_string(cur.n) +
                                     " exceeds the binary64 budget (term sum " +
                                     fmt(sm.max_terms) + ")",
                                 cur, sol.history);
        }
        if (have[par]) {
            const Sampled& prev = samples[par];
            double gap = std::numeric_limits<double>::infinity();
            double sup = 0.0;
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double d = sm.v[i] - prev.v[i];
                gap = std::min(gap, d);
                sup = std::max(sup, std::abs(d));
            }
            cur.sup_delta = sup;
            cur.barrier_delta = std::abs(cur.barrier - last[par].barrier);
            rec.sup_delta = sup;
            rec.barrier_delta = cur.barrier_delta;
            rec.barrier_step = cur.barrier - last[par].barrier;
            rec.min_gap = gap;
            sol.history.push_back(rec);
            if (gap < -opts.monotone_tol) {
                throw RecursionError(ErrorCode::MonotonicityViolation,
                                     "V_" + std::to_string(cur.n) + " < V_" +
                                         std::to_string(cur.n - 2) + " by " + fmt(-gap),
                                     cur, sol.history);
            }
            if (opts.enforce_barrier_monotonicity &&
                cur.barrier > last[par].barrier + opts.barrier_monotone_tol) {
                throw RecursionError(ErrorCode::MonotonicityViolation,
                                     "barrier increased at n = " + std::to_string(cur.n),
                                     cur, sol.history);
            }
        } else {
            rec.sup_delta = std::numeric_limits<double>::infinity();
            rec.barrier_delta = std::numeric_limits<double>::infinity();
            cur.sup_delta = rec.sup_delta;
            cur.barrier_delta = rec.barrier_delta;
            sol.history.push_back(rec);
        }
        last[par] = cur;
        samples[par] = sm;
        have[par] = true;

        if (par == 1 && cur.n >= 3 && cur.sup_delta < opts.tol && last[0].sup_delta < opts.tol &&
            cur.barrier_delta < opts.tol) {
            break;
        }
        if (cur.n >= opts.max_iter) {
            throw RecursionError(ErrorCode::NoConvergence,
                                 "no convergence after " + std::to_string(opts.max_iter) +
                                     " iterations (last sup delta " + fmt(cur.sup_delta) + ")",
                                 cur, sol.history);
        }
        try {
            cur = par == 0 ? step_odd(cur, p, opts) : step_even(cur, p, opts);
        } catch (const RecursionError&) {
            throw;
        } catch (const Error& e) {
            throw RecursionError(e.code(), e.what(), last[par], sol.history);
        }
    }

    sol.v_low = last[1].v;
    sol.v_high = last[0].v;
    sol.barrier = last[1].barrier;
    sol.iterations = last[1].n;
    sol.lambda2_fixed_point = p.lambda2 == 0.0;
    sol.residual_report = hjb_residual(sol, p, grid, opts.tol_hjb);
    return sol;
}

HjbReport hjb_residual(const PiecewiseExpPoly& v_low, const PiecewiseExpPoly& v_high,
                       const ModelParams& p, const std::vector<double>& grid, double tol_hjb) {
    HjbReport r;
    r.tol = tol_hjb;
    r.low = state_residual(v_low, v_high, p.delta1, p.lambda1, p, grid);
    r.high = state_residual(v_high, v_low, p.delta2, p.lambda2, p, grid);
    r.max_violation = std::max(r.low.max_violation, r.high.max_violation);
    r.passed = r.max_violation <= tol_hjb && r.low.min_r1 >= -tol_hjb &&
               r.low.min_r2 >= -tol_hjb && r.high.min_r1 >= -tol_hjb &&
               r.high.min_r2 >= -tol_hjb;
    return r;
}

HjbReport hjb_residual(const Solution& sol, const ModelParams& p, const std::vector<double>& grid,
                       double tol_hjb) {
    return hjb_residual(sol.v_low, sol.v_high, p, grid, tol_hjb);
}

}  // namespace barrier_solver

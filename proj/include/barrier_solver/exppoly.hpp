#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "barrier_solver/error.hpp"

namespace barrier_solver {

/// c * x^k * exp(theta * x)
struct ExpPolyTerm {
    double coeff = 0.0;
    int power = 0;
    double rate = 0.0;

    friend bool operator==(const ExpPolyTerm&, const ExpPolyTerm&) = default;
};

using ExpPolyPiece = std::vector<ExpPolyTerm>;

/// A function on [0, inf) given piecewise by finite sums of ExpPolyTerm.
///
/// breakpoints()[j] is the left end of piece j; piece j is valid on
/// [breakpoints[j], breakpoints[j+1]) and the last piece on
/// [breakpoints.back(), inf). breakpoints[0] == 0 always. All terms use the
/// global coordinate x (not x - breakpoint). The last piece must vanish at
/// infinity, i.e. every rate in it is negative.
class PiecewiseExpPoly {
public:
    /// The zero function.
    PiecewiseExpPoly();
    PiecewiseExpPoly(std::vector<double> breakpoints, std::vector<ExpPolyPiece> pieces);

    static PiecewiseExpPoly single(ExpPolyPiece piece);

    [[nodiscard]] const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    [[nodiscard]] const std::vector<ExpPolyPiece>& pieces() const noexcept { return pieces_; }
    [[nodiscard]] std::size_t piece_count() const noexcept { return pieces_.size(); }
    [[nodiscard]] std::size_t piece_index(double x) const noexcept;
    [[nodiscard]] const ExpPolyPiece& piece_at(double x) const noexcept {
        return pieces_[piece_index(x)];
    }
    /// Right end of piece j (inf for the last piece).
    [[nodiscard]] double piece_end(std::size_t j) const noexcept;

    /// Largest rate in the last piece; -inf when the last piece is empty.
    [[nodiscard]] double tail_rate_bound() const noexcept;
    [[nodiscard]] int max_power() const noexcept;
    [[nodiscard]] std::size_t term_count() const noexcept;

    /// f(x), f'(x) or f''(x) (order 0, 1, 2; higher orders also work).
    [[nodiscard]] double eval(double x, int order = 0) const;
    [[nodiscard]] double operator()(double x) const { return eval(x, 0); }

    /// Sum of |term| at x. Compared with |f(x)| it measures cancellation.
    [[nodiscard]] double abs_term_sum(double x, int order = 0) const;

    /// Largest relative jump of the given derivative across breakpoints.
    [[nodiscard]] double continuity_defect(int order = 0) const;

    [[nodiscard]] PiecewiseExpPoly derivative() const;

    friend bool operator==(const PiecewiseExpPoly&, const PiecewiseExpPoly&) = default;

private:
    std::vector<double> breakpoints_;
    std::vector<ExpPolyPiece> pieces_;
};

/// Value of the order-th derivative of one term at x >= 0.
[[nodiscard]] double eval_term(const ExpPolyTerm& t, double x, int order = 0) noexcept;

/// eval(f, x, order) for x >= 0; at a breakpoint the right piece is used.
[[nodiscard]] double eval(const PiecewiseExpPoly& f, double x, int order = 0);

/// int_b^inf f(y) exp(-beta (y - b)) dy, exactly (closed-form antiderivatives,
/// split at breakpoints). Throws Divergent unless beta exceeds every rate in
/// the last piece.
[[nodiscard]] double integrate_exp_tail(const PiecewiseExpPoly& f, double b, double beta);

/// int_l^r g(y) exp(s (y - anchor)) dy for one piece g; r may be +inf.
[[nodiscard]] double weighted_integral(const ExpPolyPiece& piece, double l, double r, double s,
                                       double anchor);

/// Coefficients of  (sigma^2/2) V'' + mu V' - (lambda + delta) V + lambda U = 0.
/// The homogeneous solutions are exp(-A x) and exp(At x), with
/// A = (mu + psi)/sigma^2, At = (psi - mu)/sigma^2, psi = sqrt(mu^2 + 2 sigma^2 (delta + lambda)).
struct OdeCoeffs {
    double mu = 0.0;
    double sigma = 0.0;
    double lambda = 0.0;
    double delta = 0.0;
    double psi = 0.0;
    double A = 0.0;
    double At = 0.0;

    /// Requires mu > 0, sigma > 0, lambda >= 0 and delta + lambda > 0.
    static OdeCoeffs make(double mu, double sigma, double lambda, double delta);
};

struct ExpPolyOptions {
    int p_max = 96;
    /// terms whose sup-norm on their piece falls below eps_prune times the
    /// largest term sup-norm of that piece are dropped
    double eps_prune = 1e-14;
    double resonance_tol = 1e-9;
    double merge_tol = 1e-12;
    bool check_preconditions = true;
    int precondition_points = 400;
    double precondition_tol = 1e-9;
};

/// Throws PreconditionViolated unless U is (on a grid) nonnegative,
/// nonincreasing, convex, and vanishes at infinity.
void check_barrier_ode_preconditions(const PiecewiseExpPoly& U, double b, const OdeCoeffs& k,
                                     const ExpPolyOptions& opts = {});

/// Solves  (sigma^2/2) V'' + mu V' - (lambda+delta) V + lambda U = 0  on [b, inf)
/// with V'(b) = -1 and V -> 0 at infinity, and extends V linearly with slope -1
/// on [0, b). The result is exact in the exponential-polynomial class: every
/// piece of U on [b, inf) yields one piece of V.
[[nodiscard]] PiecewiseExpPoly solve_barrier_ode(const PiecewiseExpPoly& U, double b,
                                                 const OdeCoeffs& k,
                                                 const ExpPolyOptions& opts = {});

/// V(b) of the solve above: (1/A) (1 + (2 lambda / sigma^2) int_b^inf U(y) e^{At (b-y)} dy).
[[nodiscard]] double barrier_boundary_value(const PiecewiseExpPoly& U, double b, const OdeCoeffs& k);

/// V_b''(b) of the solve above, evaluated without constructing V_b.
/// Nondecreasing in b for convex, decreasing U.
[[nodiscard]] double second_derivative_at_barrier(const PiecewiseExpPoly& U, double b,
                                                  const OdeCoeffs& k,
                                                  const ExpPolyOptions& opts = {});

}  // namespace barrier_solver

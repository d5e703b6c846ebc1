#include "barrier_solver/exppoly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

namespace barrier_solver {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool same_rate(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
}

// x^k e^{theta x} for x >= 0, in log form where that avoids overflow
double monomial_exp(int k, double theta, double x) {
    if (k == 0) return std::exp(theta * x);
    if (x == 0.0) return 0.0;
    return std::exp(k * std::log(x) + theta * x);
}

double log_binom(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// log of M_j(a) = int_0^1 t^j e^{a t} dt
double log_unit_moment(int j, double a) {
    if (a == 0.0) return -std::log(j + 1.0);
    if (a > 0.0) {
        // sum_m a^m / (m! (j+m+1)), summed in log space
        const double la = std::log(a);
        const int m_max = static_cast<int>(a + 12.0 * std::sqrt(a) + 60.0);
        double peak = -kInf;
        for (int m = 0; m <= m_max; ++m) {
            peak = std::max(peak, m * la - std::lgamma(m + 1.0) - std::log(j + m + 1.0));
        }
        double s = 0.0;
        for (int m = 0; m <= m_max; ++m) {
            s += std::exp(m * la - std::lgamma(m + 1.0) - std::log(j + m + 1.0) - peak);
        }
        return peak + std::log(s);
    }
    const double x = -a;
    if (x > 2000.0) {
        // gamma(j+1, x) / x^{j+1}
        return std::lgamma(j + 1.0) - (j + 1.0) * std::log(x) +
               std::log(boost::math::gamma_p(j + 1.0, x));
    }
    // e^{-x} sum_m x^m / ((j+1)(j+2)...(j+1+m)), all terms positive
    const double lx = std::log(x);
    double lt = -std::log(j + 1.0);
    double peak = lt;
    double s = 1.0;
    for (int m = 1;; ++m) {
        lt += lx - std::log(j + 1.0 + m);
        if (lt > peak) {
            s = s * std::exp(peak - lt) + 1.0;
            peak = lt;
        } else {
            s += std::exp(lt - peak);
        }
        if (m > x - j && lt - peak < -40.0) break;
    }
    return -x + peak + std::log(s);
}

// int_l^r y^k e^{q y} dy * e^{shift}, r may be inf
double monomial_integral(int k, double q, double l, double r, double shift) {
    const bool infinite = std::isinf(r);
    if (infinite && !(q < 0.0)) {
        throw Error(ErrorCode::Divergent, "integral of x^k e^{qx} to infinity needs q < 0");
    }
    const double base = q * l + shift;
    const double ll = l > 0.0 ? std::log(l) : 0.0;
    const double L = r - l;
    const double lL = infinite ? 0.0 : std::log(L);
    double sum = 0.0;
    for (int j = (l > 0.0 ? 0 : k); j <= k; ++j) {
        double lv = base + log_binom(k, j) + (k - j) * ll;
        if (infinite) {
            lv += std::lgamma(j + 1.0) - (j + 1.0) * std::log(-q);
        } else {
            lv += (j + 1.0) * lL + log_unit_moment(j, q * L);
        }
        sum += std::exp(lv);
    }
    return sum;
}

// largest log |term| on [l, r]
double log_sup(const ExpPolyTerm& t, double l, double r) {
    const double lc = std::log(std::abs(t.coeff));
    auto at = [&](double x) {
        if (std::isinf(x)) return -kInf;
        if (t.power == 0) return lc + t.rate * x;
        if (x == 0.0) return -kInf;
        return lc + t.power * std::log(x) + t.rate * x;
    };
    double x = r;
    if (t.rate < 0.0) {
        x = t.power > 0 ? std::clamp(-t.power / t.rate, l, r) : l;
    }
    if (std::isinf(x)) x = l;
    return std::max({at(x), at(l), at(std::isinf(r) ? l : r)});
}

ExpPolyPiece merge_terms(ExpPolyPiece terms) {
    std::sort(terms.begin(), terms.end(), [](const ExpPolyTerm& a, const ExpPolyTerm& b) {
        if (a.rate != b.rate) return a.rate < b.rate;
        return a.power < b.power;
    });
    ExpPolyPiece out;
    for (const auto& t : terms) {
        if (t.coeff == 0.0) continue;
        bool merged = false;
        for (auto it = out.rbegin(); it != out.rend() && same_rate(it->rate, t.rate); ++it) {
            if (it->power == t.power) {
                it->coeff += t.coeff;
                merged = true;
                break;
            }
        }
        if (!merged) out.push_back(t);
    }
    std::erase_if(out, [](const ExpPolyTerm& t) { return t.coeff == 0.0; });
    return out;
}

ExpPolyPiece prune(ExpPolyPiece terms, double l, double r, double eps) {
    if (terms.empty()) return terms;
    std::vector<double> ls(terms.size());
    double top = -kInf;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        ls[i] = log_sup(terms[i], l, r);
        top = std::max(top, ls[i]);
    }
    const double cut = top + std::log(eps);
    ExpPolyPiece out;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (ls[i] >= cut) out.push_back(terms[i]);
    }
    return out;
}

double piece_eval(const ExpPolyPiece& p, double x, int order) {
    double s = 0.0;
    for (const auto& t : p) s += eval_term(t, x, order);
    return s;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

double eval_term(const ExpPolyTerm& t, double x, int order) noexcept {
    // d^n/dx^n x^k e^{tx} = sum_i C(n,i) k!/(k-i)! x^{k-i} t^{n-i} e^{tx}
    double s = 0.0;
    double binom = 1.0;
    double falling = 1.0;
    for (int i = 0; i <= std::min(order, t.power); ++i) {
        if (i > 0) {
            binom = binom * (order - i + 1) / i;
            falling *= (t.power - i + 1);
        }
        const int rest = order - i;
        const double rp = rest == 0 ? 1.0 : std::pow(t.rate, rest);
        if (rp == 0.0) continue;
        s += binom * falling * rp * monomial_exp(t.power - i, t.rate, x);
    }
    return t.coeff * s;
}

PiecewiseExpPoly::PiecewiseExpPoly() : breakpoints_{0.0}, pieces_(1) {}

PiecewiseExpPoly::PiecewiseExpPoly(std::vector<double> breakpoints,
                                   std::vector<ExpPolyPiece> pieces)
    : breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)) {
    if (breakpoints_.empty() || breakpoints_.size() != pieces_.size()) {
        throw Error(ErrorCode::PreconditionViolated,
                    "need one breakpoint (left end) per piece");
    }
    if (breakpoints_[0] != 0.0) {
        throw Error(ErrorCode::PreconditionViolated, "first breakpoint must be 0");
    }
    for (std::size_t j = 1; j < breakpoints_.size(); ++j) {
        if (!(breakpoints_[j] > breakpoints_[j - 1]) || !std::isfinite(breakpoints_[j])) {
            throw Error(ErrorCode::PreconditionViolated,
                        "breakpoints must be finite and strictly increasing");
        }
    }
    for (const auto& p : pieces_) {
        for (const auto& t : p) {
            if (t.power < 0 || !std::isfinite(t.coeff) || !std::isfinite(t.rate)) {
                throw Error(ErrorCode::PreconditionViolated, "malformed term");
            }
        }
    }
    for (const auto& t : pieces_.back()) {
        if (t.coeff != 0.0 && !(t.rate < 0.0)) {
            throw Error(ErrorCode::PreconditionViolated,
                        "last piece must vanish at infinity (rate " + fmt(t.rate) + ")");
        }
    }
}

PiecewiseExpPoly PiecewiseExpPoly::single(ExpPolyPiece piece) {
    return PiecewiseExpPoly({0.0}, {std::move(piece)});
}

std::size_t PiecewiseExpPoly::piece_index(double x) const noexcept {
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
    if (it == breakpoints_.begin()) return 0;
    return static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
}

double PiecewiseExpPoly::piece_end(std::size_t j) const noexcept {
    return j + 1 < breakpoints_.size() ? breakpoints_[j + 1] : kInf;
}

double PiecewiseExpPoly::tail_rate_bound() const noexcept {
    double r = -kInf;
    for (const auto& t : pieces_.back()) r = std::max(r, t.rate);
    return r;
}

int PiecewiseExpPoly::max_power() const noexcept {
    int k = 0;
    for (const auto& p : pieces_)
        for (const auto& t : p) k = std::max(k, t.power);
    return k;
}

std::size_t PiecewiseExpPoly::term_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : pieces_) n += p.size();
    return n;
}

double PiecewiseExpPoly::eval(double x, int order) const {
    if (!(x >= 0.0)) {
        throw Error(ErrorCode::PreconditionViolated, "evaluation needs x >= 0");
    }
    return piece_eval(pieces_[piece_index(x)], x, order);
}

double PiecewiseExpPoly::abs_term_sum(double x, int order) const {
    double s = 0.0;
    for (const auto& t : pieces_[piece_index(x)]) s += std::abs(eval_term(t, x, order));
    return s;
}

double PiecewiseExpPoly::continuity_defect(int order) const {
    double worst = 0.0;
    for (std::size_t j = 1; j < breakpoints_.size(); ++j) {
        const double x = breakpoints_[j];
        const double l = piece_eval(pieces_[j - 1], x, order);
        const double r = piece_eval(pieces_[j], x, order);
        const double scale = std::max({std::abs(l), std::abs(r), 1e-300});
        worst = std::max(worst, std::abs(l - r) / scale);
    }
    return worst;
}

PiecewiseExpPoly PiecewiseExpPoly::derivative() const {
    std::vector<ExpPolyPiece> out;
    out.reserve(pieces_.size());
    for (const auto& p : pieces_) {
        ExpPolyPiece d;
        for (const auto& t : p) {
            if (t.power > 0) d.push_back({t.coeff * t.power, t.power - 1, t.rate});
            if (t.rate != 0.0) d.push_back({t.coeff * t.rate, t.power, t.rate});
        }
        out.push_back(merge_terms(std::move(d)));
    }
    return PiecewiseExpPoly(breakpoints_, std::move(out));
}

double eval(const PiecewiseExpPoly& f, double x, int order) { return f.eval(x, order); }

double weighted_integral(const ExpPolyPiece& piece, double l, double r, double s, double anchor) {
    if (!(r > l)) return 0.0;
    double sum = 0.0;
    for (const auto& t : piece) {
        if (t.coeff == 0.0) continue;
        sum += t.coeff * monomial_integral(t.power, t.rate + s, l, r, -s * anchor);
    }
    return sum;
}

double integrate_exp_tail(const PiecewiseExpPoly& f, double b, double beta) {
    if (!(b >= 0.0) || !std::isfinite(b)) {
        throw Error(ErrorCode::PreconditionViolated, "integrate_exp_tail needs finite b >= 0");
    }
    if (!f.pieces().back().empty() && !(beta > f.tail_rate_bound())) {
        throw Error(ErrorCode::Divergent, "beta = " + fmt(beta) +
                                              " does not exceed the tail rate " +
                                              fmt(f.tail_rate_bound()));
    }
    double sum = 0.0;
    for (std::size_t j = f.piece_index(b); j < f.piece_count(); ++j) {
        const double l = std::max(b, f.breakpoints()[j]);
        sum += weighted_integral(f.pieces()[j], l, f.piece_end(j), -beta, b);
    }
    return sum;
}

OdeCoeffs OdeCoeffs::make(double mu, double sigma, double lambda, double delta) {
    if (!(mu > 0.0)) throw Error(ErrorCode::NonPositiveDrift, "mu > 0 violated");
    if (!(sigma > 0.0)) throw Error(ErrorCode::NonPositiveVolatility, "sigma > 0 violated");
    if (!(lambda >= 0.0)) throw Error(ErrorCode::BadIntensity, "lambda >= 0 violated");
    if (!(delta + lambda > 0.0)) {
        throw Error(ErrorCode::IllPosed, "delta + lambda > 0 violated");
    }
    OdeCoeffs k;
    k.mu = mu;
    k.sigma = sigma;
    k.lambda = lambda;
    k.delta = delta;
    const double s2 = sigma * sigma;
    k.psi = std::sqrt(mu * mu + 2.0 * s2 * (delta + lambda));
    k.A = (mu + k.psi) / s2;
    // psi - mu written without cancellation
    k.At = 2.0 * (delta + lambda) / (mu + k.psi);
    return k;
}

void check_barrier_ode_preconditions(const PiecewiseExpPoly& U, double b, const OdeCoeffs& k,
                                     const ExpPolyOptions& opts) {
    if (!U.pieces().back().empty() && !(U.tail_rate_bound() < 0.0)) {
        throw Error(ErrorCode::PreconditionViolated, "U does not vanish at infinity");
    }
    const int n = std::max(opts.precondition_points, 2);
    const double x_end = b + 40.0 / k.At;
    std::vector<double> v(n), d1(n), d2(n);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = x_end * i / (n - 1);
        v[i] = U.eval(x, 0);
        d1[i] = U.eval(x, 1);
        d2[i] = U.eval(x, 2);
        s0 = std::max(s0, std::abs(v[i]));
        s1 = std::max(s1, std::abs(d1[i]));
        s2 = std::max(s2, std::abs(d2[i]));
    }
    const double tol = opts.precondition_tol;
    for (int i = 0; i < n; ++i) {
        const double x = x_end * i / (n - 1);
        if (v[i] < -tol * (1.0 + s0)) {
            throw Error(ErrorCode::PreconditionViolated, "U < 0 at x = " + fmt(x));
        }
        if (d1[i] > tol * (1.0 + s1)) {
            throw Error(ErrorCode::PreconditionViolated, "U increasing at x = " + fmt(x));
        }
        if (d2[i] < -tol * (1.0 + s2)) {
            throw Error(ErrorCode::PreconditionViolated, "U not convex at x = " + fmt(x));
        }
    }
}

namespace {

// polynomial-times-exponential particular solution of
// (s^2/2) P'' + mu P' - (lambda+delta) P = -lambda U on one piece
ExpPolyPiece particular_solution(const ExpPolyPiece& u, const OdeCoeffs& k,
                                 const ExpPolyOptions& opts) {
    ExpPolyPiece out;
    const ExpPolyPiece terms = merge_terms(u);
    const double q2 = 0.5 * k.sigma * k.sigma;
    std::size_t i = 0;
    while (i < terms.size()) {
        std::size_t j = i;
        int K = 0;
        while (j < terms.size() && same_rate(terms[j].rate, terms[i].rate)) {
            K = std::max(K, terms[j].power);
            ++j;
        }
        double theta = terms[i].rate;
        std::vector<double> f(K + 1, 0.0);
        for (std::size_t m = i; m < j; ++m) f[terms[m].power] += -k.lambda * terms[m].coeff;

        bool resonant = false;
        if (std::abs(theta + k.A) < opts.resonance_tol * k.A) {
            theta = -k.A;
            resonant = true;
        } else if (std::abs(theta - k.At) < opts.resonance_tol * k.At) {
            theta = k.At;
            resonant = true;
        }
        const double q1 = k.sigma * k.sigma * theta + k.mu;
        if (resonant) {
            std::vector<double> q(K + 2, 0.0);
            for (int m = K; m >= 0; --m) q[m] = (f[m] - q2 * (m + 1) * q[m + 1]) / q1;
            for (int m = 0; m <= K; ++m) {
                if (q[m] != 0.0) out.push_back({q[m] / (m + 1), m + 1, theta});
            }
        } else {
            const double q0 = q2 * (theta + k.A) * (theta - k.At);
            std::vector<double> p(K + 3, 0.0);
            for (int m = K; m >= 0; --m) {
                p[m] = (f[m] - q1 * (m + 1) * p[m + 1] - q2 * (m + 2) * (m + 1) * p[m + 2]) / q0;
            }
            for (int m = 0; m <= K; ++m) {
                if (p[m] != 0.0) out.push_back({p[m], m, theta});
            }
        }
        i = j;
    }
    return out;
}

struct Layout {
    std::vector<double> z;              // left ends of the pieces on [b, inf)
    std::vector<std::size_t> u_piece;   // piece of U active on each
};

Layout layout(const PiecewiseExpPoly& U, double b, const OdeCoeffs& k, const ExpPolyOptions& opts) {
    Layout lay;
    lay.z.push_back(b);
    if (k.lambda > 0.0) {
        for (double bp : U.breakpoints()) {
            if (bp > lay.z.back() + opts.merge_tol) lay.z.push_back(bp);
        }
    }
    for (std::size_t i = 0; i < lay.z.size(); ++i) {
        lay.u_piece.push_back(i + 1 < lay.z.size() ? U.piece_index(0.5 * (lay.z[i] + lay.z[i + 1]))
                                                   : U.piece_count() - 1);
    }
    return lay;
}

}  // namespace

PiecewiseExpPoly solve_barrier_ode(const PiecewiseExpPoly& U, double b, const OdeCoeffs& k,
                                   const ExpPolyOptions& opts) {
    if (!(b >= 0.0) || !std::isfinite(b)) {
        throw Error(ErrorCode::PreconditionViolated, "barrier must be finite and >= 0");
    }
    if (opts.check_preconditions) check_barrier_ode_preconditions(U, b, k, opts);

    const Layout lay = layout(U, b, k, opts);
    const std::size_t p = lay.z.size();
    const auto& z = lay.z;
    auto upiece = [&](std::size_t i) -> const ExpPolyPiece& { return U.pieces()[lay.u_piece[i]]; };
    auto zend = [&](std::size_t i) { return i + 1 < p ? z[i + 1] : kInf; };

    // E+_i = lambda int_{z_i}^inf U e^{-At (y - z_i)},  E-_i = lambda int_b^{z_i} U e^{A (y - z_i)}
    std::vector<double> ep(p, 0.0), em(p, 0.0);
    if (k.lambda > 0.0) {
        for (std::size_t i = p; i-- > 0;) {
            ep[i] = k.lambda * weighted_integral(upiece(i), z[i], zend(i), -k.At, z[i]);
            if (i + 1 < p) ep[i] += std::exp(-k.At * (z[i + 1] - z[i])) * ep[i + 1];
        }
        for (std::size_t i = 0; i + 1 < p; ++i) {
            em[i + 1] = std::exp(-k.A * (z[i + 1] - z[i])) * em[i] +
                        k.lambda * weighted_integral(upiece(i), z[i], z[i + 1], k.A, z[i + 1]);
        }
    }
    const double cb = (1.0 + k.At / k.psi * ep[0]) / k.A;
    const double vb = cb + ep[0] / k.psi;

    const bool linear_part = b > opts.merge_tol;
    std::vector<double> bps;
    std::vector<ExpPolyPiece> pieces;
    if (linear_part) {
        bps.push_back(0.0);
        pieces.push_back({{vb + b, 0, 0.0}, {-1.0, 1, 0.0}});
    }
    for (std::size_t i = 0; i < p; ++i) {
        ExpPolyPiece terms =
            k.lambda > 0.0 ? particular_solution(upiece(i), k, opts) : ExpPolyPiece{};
        const double h = cb * std::exp(-k.A * (z[i] - b));
        const double vz = h + (em[i] + ep[i]) / k.psi;
        const double vpz = -k.A * (h + em[i] / k.psi) + k.At * ep[i] / k.psi;
        const double r0 = vz - piece_eval(terms, z[i], 0);
        const double r1 = vpz - piece_eval(terms, z[i], 1);
        double c_up = 0.0;
        double c_down = r0;
        if (i + 1 < p) {
            c_up = (r1 + k.A * r0) / (k.A + k.At);
            c_down = r0 - c_up;
        }
        terms.push_back({c_down * std::exp(k.A * z[i]), 0, -k.A});
        if (c_up != 0.0) terms.push_back({c_up * std::exp(-k.At * z[i]), 0, k.At});
        terms = prune(merge_terms(std::move(terms)), z[i], zend(i), opts.eps_prune);
        for (const auto& t : terms) {
            if (t.power > opts.p_max) {
                throw Error(ErrorCode::ResonanceEscalation,
                            "x-power " + std::to_string(t.power) + " exceeds P_max = " +
                                std::to_string(opts.p_max));
            }
            if (!std::isfinite(t.coeff)) {
                throw Error(ErrorCode::NumericalBreakdown, "non-finite coefficient in ODE solve");
            }
        }
        bps.push_back(i == 0 && !linear_part ? 0.0 : z[i]);
        pieces.push_back(std::move(terms));
    }
    return PiecewiseExpPoly(std::move(bps), std::move(pieces));
}

double barrier_boundary_value(const PiecewiseExpPoly& U, double b, const OdeCoeffs& k) {
    const double I = k.lambda > 0.0 ? integrate_exp_tail(U, b, k.At) : 0.0;
    return (1.0 + 2.0 * k.lambda / (k.sigma * k.sigma) * I) / k.A;
}

double second_derivative_at_barrier(const PiecewiseExpPoly& U, double b, const OdeCoeffs& k,
                                    const ExpPolyOptions& opts) {
    if (!(b >= 0.0) || !std::isfinite(b)) {
        throw Error(ErrorCode::PreconditionViolated, "barrier must be finite and >= 0");
    }
    if (opts.check_preconditions) check_barrier_ode_preconditions(U, b, k, opts);
    const double s2 = k.sigma * k.sigma;
    double g = 2.0 * k.mu / s2 + 2.0 * (k.lambda + k.delta) / (s2 * k.A);
    if (k.lambda > 0.0) {
        g += 2.0 * k.lambda / s2 * (k.At * integrate_exp_tail(U, b, k.At) - U.eval(b));
    }
    return g;
}

}  // namespace barrier_solver

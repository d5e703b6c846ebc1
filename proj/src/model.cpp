#include "barrier_solver/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace barrier_solver {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::IllPosed: return "IllPosed";
        case ErrorCode::NonPositiveVolatility: return "NonPositiveVolatility";
        case ErrorCode::NonPositiveDrift: return "NonPositiveDrift";
        case ErrorCode::BadIntensity: return "BadIntensity";
        case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
        case ErrorCode::Divergent: return "Divergent";
        case ErrorCode::ResonanceEscalation: return "ResonanceEscalation";
        case ErrorCode::PreconditionViolated: return "PreconditionViolated";
        case ErrorCode::Lambda2Zero: return "Lambda2Zero";
        case ErrorCode::NotApplicable: return "NotApplicable";
        case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
        case ErrorCode::BracketFailure: return "BracketFailure";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::MonotonicityViolation: return "MonotonicityViolation";
        case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

std::string_view to_string(RateState s) noexcept {
    return s == RateState::Low ? "low" : "high";
}

std::string_view to_string(ValidationMode m) noexcept {
    return m == ValidationMode::Strict ? "strict" : "relaxed";
}

namespace {

bool all_finite(const ModelParams& p) {
    for (double v : {p.mu, p.sigma, p.delta1, p.delta2, p.lambda1, p.lambda2}) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::optional<Error> validate(const ModelParams& p) {
    if (!all_finite(p)) {
        return Error(ErrorCode::IllPosed, "all parameters must be finite");
    }
    if (!(p.mu > 0.0)) {
        return Error(ErrorCode::NonPositiveDrift, "mu > 0 violated (mu = " + fmt(p.mu) + ")");
    }
    if (!(p.sigma > 0.0)) {
        return Error(ErrorCode::NonPositiveVolatility,
                     "sigma > 0 violated (sigma = " + fmt(p.sigma) + ")");
    }
    if (!(p.lambda1 > 0.0)) {
        return Error(ErrorCode::BadIntensity,
                     "lambda1 > 0 violated (lambda1 = " + fmt(p.lambda1) + ")");
    }
    if (!(p.lambda2 >= 0.0)) {
        return Error(ErrorCode::BadIntensity,
                     "lambda2 >= 0 violated (lambda2 = " + fmt(p.lambda2) + ")");
    }
    if (p.mode == ValidationMode::Strict) {
        if (!(p.delta1 <= 0.0)) {
            return Error(ErrorCode::IllPosed, "delta1 <= 0 violated (delta1 = " + fmt(p.delta1) + ")");
        }
        if (!(p.delta2 > 0.0)) {
            return Error(ErrorCode::IllPosed, "delta2 > 0 violated (delta2 = " + fmt(p.delta2) + ")");
        }
        const double bound = p.delta1_lower_bound();
        if (!(p.delta1 > bound)) {
            return Error(ErrorCode::IllPosed,
                         "delta1 > -lambda1*delta2/(lambda2+delta2) violated (delta1 = " +
                             fmt(p.delta1) + ", bound = " + fmt(bound) + ")");
        }
    } else {
        if (!(p.delta1 + p.lambda1 > 0.0)) {
            return Error(ErrorCode::IllPosed, "delta1 + lambda1 > 0 violated");
        }
        if (!(p.delta2 + p.lambda2 > 0.0)) {
            return Error(ErrorCode::IllPosed, "delta2 + lambda2 > 0 violated");
        }
    }
    return std::nullopt;
}

void require_valid(const ModelParams& p) {
    if (auto err = validate(p)) throw *err;
}

namespace {

struct Spectrum {
    double a, b, omega1, omega2;
};

Spectrum spectrum(const ModelParams& p) {
    if (p.delta2 < p.delta1) {
        throw Error(ErrorCode::PreconditionViolated,
                    "discount formula requires delta2 >= delta1");
    }
    Spectrum s{};
    s.a = -(p.lambda1 + p.lambda2 + p.delta1 + p.delta2);
    const double d = p.lambda1 + p.lambda2 + p.delta1 - p.delta2;
    s.b = std::sqrt(d * d + 4.0 * p.lambda2 * (p.delta2 - p.delta1));
    s.omega1 = p.delta2 + 0.5 * (s.a + s.b);
    s.omega2 = p.delta2 + 0.5 * (s.a - s.b);
    return s;
}

// (exp(w1 t) - exp(w2 t)) / (w1 - w2) with gap = w1 - w2 >= 0.
double divided_difference(double w1, double w2, double gap, double t) {
    const double z = gap * t;
    if (z > 1.0) return (std::exp(w1 * t) - std::exp(w2 * t)) / gap;
    if (z == 0.0) return t * std::exp(w2 * t);
    return std::exp(w2 * t) * std::expm1(z) / gap;
}

double discount_from_spectrum(const ModelParams& p, const Spectrum& s, RateState eta0, double t) {
    // shifted eigenvalues: exp(-delta2 t) is folded into the exponents
    const double w1 = 0.5 * (s.a + s.b);
    const double w2 = 0.5 * (s.a - s.b);
    const double phi = divided_difference(w1, w2, s.b, t);
    const double low = eta0 == RateState::Low ? (p.delta2 - p.delta1) : 0.0;
    return low * phi + std::exp(w2 * t) - s.omega2 * phi;
}

}  // namespace

DiscountConstants discount_constants(const ModelParams& p, const DiscountOptions& opts) {
    require_valid(p);
    const Spectrum s = spectrum(p);
    DiscountConstants k;
    k.a = s.a;
    k.b = s.b;
    k.omega1 = s.omega1;
    k.omega2 = s.omega2;
    k.c = -(s.omega1 - p.delta2);

    const double scale = std::max({1.0, std::abs(s.omega1), std::abs(s.omega2)});
    if (s.b < opts.degenerate_rel_tol * scale) {
        throw Error(ErrorCode::DegenerateSpectrum,
                    "omega1 and omega2 coincide; no exponential envelope with rate c exists");
    }

    // E(t) exp(ct) -> ((delta2 - delta1) 1{low} - omega2) / (omega1 - omega2) as t -> inf
    double env = 1.0;
    for (RateState eta : {RateState::Low, RateState::High}) {
        const double low = eta == RateState::Low ? (p.delta2 - p.delta1) : 0.0;
        env = std::max(env, (low - s.omega2) / s.b);
        for (int i = 0; i < opts.envelope_grid; ++i) {
            const double t = opts.envelope_horizon * i / (opts.envelope_grid - 1);
            env = std::max(env, discount_from_spectrum(p, s, eta, t) * std::exp(k.c * t));
        }
    }
    k.envelope_c = env;
    return k;
}

double expected_discount(const ModelParams& p, RateState eta0, double t) {
    require_valid(p);
    if (!(t >= 0.0)) {
        throw Error(ErrorCode::PreconditionViolated, "expected_discount requires t >= 0");
    }
    return discount_from_spectrum(p, spectrum(p), eta0, t);
}

double discount_envelope(const DiscountConstants& k, double t) noexcept {
    return k.envelope_c * std::exp(-k.c * t);
}

double discount_envelope(const ModelParams& p, double t) {
    const DiscountConstants k = discount_constants(p);
    if (!(k.c > 0.0)) {
        throw Error(ErrorCode::PreconditionViolated,
                    "discount envelope requires a positive decay rate c");
    }
    return discount_envelope(k, t);
}

}  // namespace barrier_solver

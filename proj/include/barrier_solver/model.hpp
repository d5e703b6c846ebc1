#pragma once

#include <optional>
#include <string_view>

#include "barrier_solver/error.hpp"

namespace barrier_solver {

enum class ValidationMode { Strict, Relaxed };

/// Two-state interest-rate regime. Low carries delta1, High carries delta2.
enum class RateState { Low, High };

[[nodiscard]] constexpr RateState other(RateState s) noexcept {
    return s == RateState::Low ? RateState::High : RateState::Low;
}

std::string_view to_string(RateState s) noexcept;
std::string_view to_string(ValidationMode m) noexcept;

/// Brownian surplus X_t = x + mu t + sigma W_t driven by a two-state
/// Markov-switching interest rate (delta1 in Low, delta2 in High).
struct ModelParams {
    double mu = 0.0;
    double sigma = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double lambda1 = 0.0;  // intensity of leaving Low
    double lambda2 = 0.0;  // intensity of leaving High
    ValidationMode mode = ValidationMode::Strict;

    [[nodiscard]] double rate(RateState s) const noexcept {
        return s == RateState::Low ? delta1 : delta2;
    }
    [[nodiscard]] double intensity(RateState s) const noexcept {
        return s == RateState::Low ? lambda1 : lambda2;
    }
    /// Well-posedness threshold: strict mode requires delta1 above it.
    [[nodiscard]] double delta1_lower_bound() const noexcept {
        return -lambda1 * delta2 / (lambda2 + delta2);
    }
};

/// Returns the first violated inequality for the declared mode, or nullopt.
[[nodiscard]] std::optional<Error> validate(const ModelParams& p);

/// Throws the error returned by validate().
void require_valid(const ModelParams& p);

/// Constants of the occupation-time representation of E[exp(-int r ds)].
/// omega1 >= omega2 are the eigenvalues of the generator-with-killing matrix
/// R = [[-lambda1 - delta1 + delta2, lambda1], [lambda2, -lambda2]].
struct DiscountConstants {
    double a = 0.0;
    double b = 0.0;
    double omega1 = 0.0;
    double omega2 = 0.0;
    double c = 0.0;            // decay rate, -(omega1 - delta2)
    double envelope_c = 0.0;   // C in  E[...] <= C exp(-c t)
};

struct DiscountOptions {
    double envelope_horizon = 50.0;  // T_env
    int envelope_grid = 5001;
    double degenerate_rel_tol = 1e-9;
};

/// Throws DegenerateSpectrum when omega1 ~ omega2: no constant C exists for
/// the pure exponential envelope in that case (a t*exp(-ct) factor appears).
[[nodiscard]] DiscountConstants discount_constants(const ModelParams& p,
                                                   const DiscountOptions& opts = {});

/// E[exp(-int_0^t r_s ds) | r_0 = eta0], closed form. Evaluated through a
/// divided difference, so the omega1 == omega2 limit needs no special case.
[[nodiscard]] double expected_discount(const ModelParams& p, RateState eta0, double t);

/// C exp(-c t) with the constants of discount_constants(). Strict mode only.
[[nodiscard]] double discount_envelope(const ModelParams& p, double t);
[[nodiscard]] double discount_envelope(const DiscountConstants& k, double t) noexcept;

}  // namespace barrier_solver

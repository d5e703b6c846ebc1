#include <doctest.h>

#include <cmath>
#include <random>

#include "../common/draws.hpp"
#include "../common/oracles.hpp"
#include "barrier_solver/model.hpp"

using namespace barrier_solver;

TEST_CASE("validation names the violated inequality") {
    ModelParams p = draws::example();
    CHECK_FALSE(validate(p).has_value());

    p.sigma = 0.0;
    REQUIRE(validate(p).has_value());
    CHECK(validate(p)->code() == ErrorCode::NonPositiveVolatility);

    p = draws::example();
    p.mu = -0.1;
    CHECK(validate(p)->code() == ErrorCode::NonPositiveDrift);

    p = draws::example();
    p.lambda1 = 0.0;
    CHECK(validate(p)->code() == ErrorCode::BadIntensity);

    p = draws::example();
    p.delta1 = -0.58;  // below -lambda1 delta2 / (lambda2 + delta2) = -0.57
    REQUIRE(validate(p).has_value());
    CHECK(validate(p)->code() == ErrorCode::IllPosed);
    CHECK(std::string(validate(p)->what()).find("delta1 >") != std::string::npos);

    p = draws::example();
    p.delta1 = 0.05;
    CHECK(validate(p)->code() == ErrorCode::IllPosed);
    p.mode = ValidationMode::Relaxed;
    CHECK_FALSE(validate(p).has_value());

    p.delta1 = std::nan("");
    CHECK(validate(p).has_value());
    CHECK_THROWS_AS(require_valid(p), Error);
}

TEST_CASE("expected_discount matches the Feynman-Kac ODE") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 20; ++i) {
        const ModelParams p = draws::strict(rng);
        for (double t : {0.0, 0.3, 1.0, 4.0, 12.0}) {
            const auto ref = oracle::rk4_discount(p, t);
            CHECK(expected_discount(p, RateState::Low, t) == doctest::Approx(ref[0]).epsilon(1e-10));
            CHECK(expected_discount(p, RateState::High, t) == doctest::Approx(ref[1]).epsilon(1e-10));
        }
    }
    const ModelParams ex = draws::example();
    const auto ref = oracle::rk4_discount(ex, 3.0);
    CHECK(expected_discount(ex, RateState::Low, 3.0) == doctest::Approx(ref[0]).epsilon(1e-10));
    CHECK(expected_discount(ex, RateState::High, 3.0) == doctest::Approx(std::exp(-0.3)).epsilon(1e-13));
}

TEST_CASE("equal rates reduce to exp(-delta t)") {
    ModelParams p{0.05, 0.45, 0.07, 0.07, 0.4, 0.3, ValidationMode::Relaxed};
    for (double t : {0.0, 0.5, 1.0, 2.0, 5.0, 30.0}) {
        CHECK(std::abs(expected_discount(p, RateState::Low, t) - std::exp(-0.07 * t)) <= 1e-12);
        CHECK(std::abs(expected_discount(p, RateState::High, t) - std::exp(-0.07 * t)) <= 1e-12);
    }
}

TEST_CASE("envelope bounds the discount from both states") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
        const ModelParams p = draws::strict(rng);
        const DiscountConstants k = discount_constants(p);
        CHECK(k.c > 0.0);
        CHECK(k.envelope_c >= 1.0);
        for (double t = 0.0; t < 200.0; t += 0.37) {
            for (RateState s : {RateState::Low, RateState::High}) {
                CHECK(expected_discount(p, s, t) <= discount_envelope(k, t) * (1 + 1e-12));
            }
        }
    }
}

TEST_CASE("decay rate is the leading eigenvalue of Q - diag(delta)") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 10; ++i) {
        const ModelParams p = draws::strict(rng);
        const double tr = -(p.lambda1 + p.delta1 + p.lambda2 + p.delta2);
        const double det = (p.lambda1 + p.delta1) * (p.lambda2 + p.delta2) - p.lambda1 * p.lambda2;
        const double top = 0.5 * (tr + std::sqrt(tr * tr - 4 * det));
        CHECK(discount_constants(p).c == doctest::Approx(-top).epsilon(1e-10));
    }
}

TEST_CASE("negative time is rejected") {
    CHECK_THROWS_AS((void)expected_discount(draws::example(), RateState::Low, -1.0), Error);
}

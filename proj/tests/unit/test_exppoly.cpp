#include <doctest.h>

#include <cmath>
#include <random>

#include "../common/draws.hpp"
#include "../common/oracles.hpp"
#include "barrier_solver/closed_form.hpp"
#include "barrier_solver/exppoly.hpp"
#include "barrier_solver/io.hpp"

using namespace barrier_solver;

namespace {

PiecewiseExpPoly sample_function() {
    return PiecewiseExpPoly({0.0, 0.7, 2.0},
                            {{{1.5, 0, 0.0}, {-1.0, 1, 0.0}},
                             {{0.3, 2, -0.4}, {2.0, 0, -1.1}},
                             {{0.8, 1, -0.9}, {1.2, 0, -0.3}, {-0.1, 3, -1.7}}});
}

oracle::Fn as_fn(const PiecewiseExpPoly& f) {
    return [f](double x) { return f.eval(x); };
}

}  // namespace

TEST_CASE("constructor rejects malformed functions") {
    CHECK_THROWS_AS(PiecewiseExpPoly({0.0, 1.0}, {{}}), Error);
    CHECK_THROWS_AS(PiecewiseExpPoly({0.5}, {{{1.0, 0, -1.0}}}), Error);
    CHECK_THROWS_AS(PiecewiseExpPoly({0.0, 2.0, 1.0}, {{}, {}, {{1.0, 0, -1.0}}}), Error);
    CHECK_THROWS_AS(PiecewiseExpPoly({0.0}, {{{1.0, 0, 0.5}}}), Error);
    CHECK_NOTHROW(PiecewiseExpPoly({0.0}, {{{1.0, 0, -0.5}}}));
    CHECK(PiecewiseExpPoly().eval(3.0) == 0.0);
}

TEST_CASE("evaluation follows the piece convention and derivatives match differences") {
    const PiecewiseExpPoly f = sample_function();
    CHECK(f.piece_index(0.0) == 0);
    CHECK(f.piece_index(0.7) == 1);
    CHECK(f.piece_index(1.99) == 1);
    CHECK(f.piece_index(50.0) == 2);
    CHECK(f.eval(0.5) == doctest::Approx(1.5 - 0.5));
    CHECK_THROWS_AS((void)f.eval(-0.1), Error);

    const auto fn = as_fn(f);
    for (double x : {0.1, 0.4, 1.0, 1.5, 3.0, 7.5}) {
        CHECK(f.eval(x, 1) == doctest::Approx(oracle::fd_derivative(fn, x, 1, 1e-3)).epsilon(1e-8));
        CHECK(f.eval(x, 2) == doctest::Approx(oracle::fd_derivative(fn, x, 2, 1e-3)).epsilon(1e-5));
        CHECK(f.derivative().eval(x) == doctest::Approx(f.eval(x, 1)).epsilon(1e-13));
    }
}

TEST_CASE("exponential tail integrals match quadrature") {
    const PiecewiseExpPoly f = sample_function();
    for (double b : {0.0, 0.3, 0.7, 1.2, 2.5}) {
        for (double beta : {0.2, 1.0, 3.0}) {
            const double ref = oracle::quad_tail(
                [&](double y) { return f.eval(y) * std::exp(-beta * (y - b)); }, b, {0.7, 2.0});
            CHECK(integrate_exp_tail(f, b, beta) == doctest::Approx(ref).epsilon(1e-10));
        }
    }
    CHECK_THROWS_AS((void)integrate_exp_tail(f, 0.0, -0.5), Error);
}

TEST_CASE("weighted integrals of one piece match quadrature, including large exponents") {
    const ExpPolyPiece g{{0.7, 0, -0.2}, {-0.4, 2, -1.3}, {0.05, 5, -0.8}};
    for (double s : {-40.0, -3.0, 0.0, 0.5, 25.0}) {
        const double l = 0.4, r = 3.1, anchor = 1.0;
        const double ref = oracle::quad(
            [&](double y) {
                double v = 0.0;
                for (const auto& t : g) v += eval_term(t, y);
                return v * std::exp(s * (y - anchor));
            },
            l, r);
        CHECK(weighted_integral(g, l, r, s, anchor) == doctest::Approx(ref).epsilon(1e-11));
    }
}

TEST_CASE("barrier ODE solution satisfies the ODE and the boundary conditions") {
    const ModelParams p = draws::example();
    const PiecewiseExpPoly U = PiecewiseExpPoly::single({{0.6, 0, -1.2}, {0.2, 0, -0.35}});
    const OdeCoeffs k = OdeCoeffs::make(p.mu, p.sigma, 0.57, -0.3);
    for (double b : {0.0, 0.5, 2.0}) {
        const PiecewiseExpPoly V = solve_barrier_ode(U, b, k);
        CHECK(V.eval(b, 1) == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(std::abs(V.eval(60.0)) < 1e-6);
        for (double x : {b + 0.01, b + 0.5, b + 2.0, b + 9.0}) {
            const double r = 0.5 * p.sigma * p.sigma * V.eval(x, 2) + p.mu * V.eval(x, 1) -
                             (k.lambda + k.delta) * V.eval(x) + k.lambda * U.eval(x);
            CHECK(std::abs(r) < 1e-12);
        }
        if (b > 0) {
            CHECK(V.eval(0.5 * b, 1) == doctest::Approx(-1.0));
            CHECK(V.eval(0.5 * b, 2) == 0.0);
            CHECK(V.eval(0.0) == doctest::Approx(V.eval(b) + b).epsilon(1e-13));
        }
        CHECK(barrier_boundary_value(U, b, k) == doctest::Approx(V.eval(b)).epsilon(1e-12));
        CHECK(second_derivative_at_barrier(U, b, k) == doctest::Approx(V.eval(b, 2)).epsilon(1e-10));
    }
}

TEST_CASE("barrier ODE agrees with a finite-difference boundary value solve") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 4; ++i) {
        const double a1 = draws::uniform(rng, 0.5, 2.0);
        const double a2 = draws::uniform(rng, 0.1, 0.5);
        const PiecewiseExpPoly U = PiecewiseExpPoly::single(
            {{draws::uniform(rng, 0.1, 1.0), 0, -a1}, {draws::uniform(rng, 0.1, 1.0), 0, -a2}});
        const double mu = draws::uniform(rng, 0.02, 0.1);
        const double sigma = draws::uniform(rng, 0.3, 0.6);
        const double lambda = draws::uniform(rng, 0.2, 1.0);
        const double delta = -draws::uniform(rng, 0.0, 0.8) * lambda;
        const double b = draws::uniform(rng, 0.0, 2.0);
        const OdeCoeffs k = OdeCoeffs::make(mu, sigma, lambda, delta);
        const PiecewiseExpPoly V = solve_barrier_ode(U, b, k);
        const double L = b + 40.0 / std::min(a2, k.A);
        const auto ref = oracle::fd_bvp(as_fn(U), b, mu, sigma, lambda, delta, L, 2e-4);
        double err = 0.0;
        for (double x = b; x < b + 10.0; x += 0.05) err = std::max(err, std::abs(V.eval(x) - ref.at(x)));
        CHECK(err < 1e-6);
    }
}

TEST_CASE("preconditions of the barrier ODE are enforced") {
    const OdeCoeffs k = OdeCoeffs::make(0.05, 0.45, 0.57, -0.3);
    const PiecewiseExpPoly increasing = PiecewiseExpPoly::single({{-1.0, 0, -1.0}});
    CHECK_THROWS_AS((void)solve_barrier_ode(increasing, 0.0, k), Error);
    ExpPolyOptions off;
    off.check_preconditions = false;
    CHECK_NOTHROW((void)solve_barrier_ode(increasing, 0.0, k, off));
    CHECK_THROWS_AS(OdeCoeffs::make(0.05, 0.45, 0.2, -0.3), Error);
}

TEST_CASE("resonant inputs raise the power and still solve exactly") {
    const OdeCoeffs k = OdeCoeffs::make(0.05, 0.45, 0.5, 0.1);
    // a rate equal to -A resonates with the decaying homogeneous solution
    const PiecewiseExpPoly U = PiecewiseExpPoly::single({{1.0 / k.A, 0, -k.A}});
    const PiecewiseExpPoly V = solve_barrier_ode(U, 0.0, k);
    CHECK(V.max_power() >= 1);
    for (double x : {0.2, 1.0, 4.0}) {
        const double r = 0.5 * k.sigma * k.sigma * V.eval(x, 2) + k.mu * V.eval(x, 1) -
                         (k.lambda + k.delta) * V.eval(x) + k.lambda * U.eval(x);
        CHECK(std::abs(r) < 1e-12);
    }
    ExpPolyOptions tight;
    tight.p_max = 0;
    CHECK_THROWS_AS((void)solve_barrier_ode(U, 0.0, k, tight), Error);
}

TEST_CASE("JSON round trip is bit exact") {
    const PiecewiseExpPoly f = solve_barrier_ode(v0(draws::example()).v_high, 1.4248,
                                                 OdeCoeffs::make(0.05, 0.45, 0.57, -0.56));
    const json j = to_json(f);
    const PiecewiseExpPoly g = function_from_json(json::parse(j.dump()));
    CHECK(g == f);
    CHECK(j.at("pieces").size() == f.piece_count());
    CHECK(j.at("pieces")[0][0].contains("theta"));
}

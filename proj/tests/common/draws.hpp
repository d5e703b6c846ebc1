#pragma once

#include <random>

#include "barrier_solver/model.hpp"
#include "barrier_solver/recursion.hpp"

namespace draws {

using barrier_solver::ModelParams;

inline double uniform(std::mt19937_64& rng, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
}

/// Strict-mode parameters: delta1 is a fraction of the way from 0 down to the
/// well-posedness bound.
inline ModelParams strict(std::mt19937_64& rng) {
    ModelParams p;
    p.mu = uniform(rng, 0.02, 0.1);
    p.sigma = uniform(rng, 0.25, 0.6);
    p.delta2 = uniform(rng, 0.03, 0.2);
    p.lambda1 = uniform(rng, 0.1, 1.0);
    p.lambda2 = uniform(rng, 0.05, 1.0);
    p.delta1 = uniform(rng, 0.1, 0.9) * p.delta1_lower_bound();
    return p;
}

/// Strict-mode parameters with lambda2 > 0 on which the exact iteration is
/// well conditioned in binary64: small lambda2 and an a priori check of the
/// per-double-step cancellation growth (parameters only, no solve).
inline ModelParams iteration_set(std::mt19937_64& rng) {
    for (;;) {
        ModelParams p;
        p.mu = uniform(rng, 0.03, 0.08);
        p.sigma = uniform(rng, 0.3, 0.5);
        p.delta2 = uniform(rng, 0.05, 0.2);
        p.lambda1 = uniform(rng, 0.2, 0.8);
        p.lambda2 = uniform(rng, 0.005, 0.03);
        p.delta1 = uniform(rng, 0.6, 0.95) * p.delta1_lower_bound();
        if (barrier_solver::recursion_conditioning(p).growth <= 0.3) return p;
    }
}

inline ModelParams example() { return {0.05, 0.45, -0.56, 0.1, 0.57, 0.0}; }

}  // namespace draws

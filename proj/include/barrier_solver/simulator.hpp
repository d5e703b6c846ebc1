#pragma once

#include <cstdint>
#include <vector>

#include "barrier_solver/model.hpp"

namespace barrier_solver {

/// Reflection at barrier_low while the rate is delta1 and at barrier_high
/// while it is delta2. (b, 0) is the optimal shape, (0, 0) the minimal-amount
/// strategy.
struct BarrierStrategy {
    double barrier_low = 0.0;
    double barrier_high = 0.0;
};

struct SimConfig {
    double x0 = 0.0;
    RateState eta0 = RateState::Low;
    double dt = 1e-3;
    double horizon = 0.0;          // <= 0: smallest T with bound(T) < truncation_tol
    std::uint64_t n_paths = 100000;
    std::uint64_t seed = 1;
    bool antithetic = true;
    double truncation_tol = 1e-4;
    // a path stops once its remaining discounted cost is bounded by path_tol
    double path_tol = 1e-7;
    // steps longer than dt are taken only where X - barrier >= far_field * sigma * sqrt(step)
    bool adaptive = true;
    double far_field = 5.0;
    unsigned threads = 0;          // 0: BARRIER_SOLVER_THREADS, else hardware concurrency
};

struct SimEstimate {
    double mean = 0.0;
    double std_error = 0.0;  // sample std of the independent units over sqrt(units)
    std::uint64_t n_paths = 0;
    double truncation_bound = 0.0;
    double dt = 0.0;
    double horizon = 0.0;
};

/// Validates the config; throws InvalidConfig naming the field.
void require_valid(const SimConfig& c);

/// Horizon T with C exp(-cT) K < tol, K = C (max barrier + sigma^2/(2 mu)).
[[nodiscard]] double auto_horizon(const ModelParams& p, const BarrierStrategy& s, double tol);
[[nodiscard]] double truncation_bound(const ModelParams& p, const BarrierStrategy& s, double horizon);

/// Estimates E[int_0^T exp(-int_0^t r) dY_t] for the reflected surplus.
[[nodiscard]] SimEstimate simulate_value(const ModelParams& p, const BarrierStrategy& s,
                                         const SimConfig& c);

/// Estimates E[exp(-int_0^t r ds) | r_0 = eta0] from sampled chains.
[[nodiscard]] SimEstimate simulate_discount(const ModelParams& p, RateState eta0, double t,
                                            const SimConfig& c);

/// One probe row per offset; barrier_low = b + offset, barrier_high = 0,
/// x0 = 0, eta0 = Low, same seed for every row.
struct ProbeRow {
    double offset = 0.0;
    double barrier = 0.0;
    SimEstimate estimate;
};

[[nodiscard]] std::vector<ProbeRow> optimality_probe(const ModelParams& p, double barrier,
                                                     const std::vector<double>& offsets,
                                                     const SimConfig& c);

/// Runs the same paths at dt and dt/2; allowance = 3 |est(dt/2) - est(dt)|.
struct DtBias {
    SimEstimate coarse;
    SimEstimate fine;
    double allowance = 0.0;
};

[[nodiscard]] DtBias measure_dt_bias(const ModelParams& p, const BarrierStrategy& s,
                                     const SimConfig& c);

/// Worker count actually used for a config.
[[nodiscard]] unsigned worker_count(const SimConfig& c);

}  // namespace barrier_solver

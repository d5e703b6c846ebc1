#include "barrier_solver/simulator.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>

#include "barrier_solver/philox.hpp"

namespace barrier_solver {

namespace {

constexpr int kLevels = 30;                      // ticks per top interval = 2^30
constexpr std::uint64_t kTop = std::uint64_t{1} << kLevels;
constexpr std::uint32_t kSwitchStream = 0x80000000u;
constexpr std::uint64_t kBlock = 2048;           // units per work item

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

struct Stats {
    double mean = 0.0;
    double std_error = 0.0;
};

Stats unit_stats(const std::vector<double>& v) {
    Stats s;
    const double n = static_cast<double>(v.size());
    s.mean = pairwise_sum(v) / n;
    if (v.size() < 2) return s;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - s.mean) * (v[i] - s.mean);
    s.std_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
    return s;
}

// Runs fn(unit) for unit in [0, units) on the configured workers. Results are
// written by index, so the reduction afterwards does not depend on scheduling.
template <class Fn>
void parallel_units(std::uint64_t units, unsigned workers, Fn fn) {
    const std::uint64_t blocks = (units + kBlock - 1) / kBlock;
    std::atomic<std::uint64_t> next{0};
    auto work = [&] {
        for (std::uint64_t b; (b = next.fetch_add(1)) < blocks;) {
            const std::uint64_t end = std::min(units, (b + 1) * kBlock);
            for (std::uint64_t u = b * kBlock; u < end; ++u) fn(u);
        }
    };
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(blocks, 1)));
    if (workers <= 1) {
        work();
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned i = 1; i < workers; ++i) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
}

/// Random streams of one path: Brownian tree nodes and holding-time uniforms.
struct Streams {
    Philox4x32 gen;
    std::uint32_t id_lo;
    std::uint32_t id_hi;
    bool flip;

    std::array<double, 2> normals(std::uint32_t top, std::uint32_t node) const {
        auto z = block_normal_pair(gen({id_lo, id_hi, top, node}));
        if (flip) z = {-z[0], -z[1]};
        return z;
    }
    double holding(std::uint32_t index, double rate) const {
        if (rate <= 0.0) return std::numeric_limits<double>::infinity();
        double u = block_uniform(gen({id_lo, id_hi, index, kSwitchStream}));
        if (flip) u = 1.0 - u;
        return -std::log(u) / rate;
    }
};

/// Brownian path built top-down by midpoint bridges. The normal of the
/// midpoint of dyadic interval (level l, index j) is component j&1 of the
/// block at (path, top interval, 2^l + j/2), so any dyadic sampling of the
/// same path sees the same W and sibling intervals share one block.
class BrownianTree {
public:
    BrownianTree(const Streams& s, double top_len) : s_(s), H_(top_len), tick_(top_len / double(kTop)) {
        for (int l = 0; l <= kLevels; ++l) sd_[l] = 0.5 * std::sqrt(std::ldexp(top_len, -l));
        open_top();
    }

    [[nodiscard]] double time() const noexcept { return double(k_) * H_ + double(t_) * tick_; }
    [[nodiscard]] double time_after(std::uint64_t step) const noexcept {
        return double(k_) * H_ + double(t_ + step) * tick_;
    }
    [[nodiscard]] double tick_length() const noexcept { return tick_; }

    /// Largest step (in ticks) that keeps dyadic alignment.
    [[nodiscard]] std::uint64_t max_aligned() const noexcept {
        return t_ == 0 ? kTop : (t_ & (~t_ + 1));
    }

    /// W(t + step) - W(t); step must be a power of two dividing the current tick.
    double advance(std::uint64_t step) {
        const std::uint64_t target = t_ + step;
        while (stack_[depth_ - 1].tick > target) {
            Node& right = stack_[depth_ - 1];
            const std::uint64_t len = right.tick - t_;
            const int level = kLevels - std::countr_zero(len);
            const std::uint64_t j = t_ / len;
            double z;
            if ((j & 1) && has_spare_) {
                z = spare_;
            } else {
                const auto zz = s_.normals(top_id(), (std::uint32_t{1} << level) + static_cast<std::uint32_t>(j >> 1));
                z = zz[j & 1];
                if (!(j & 1)) {
                    right.spare = zz[1];  // right sibling starts where this interval ends
                    right.has_spare = true;
                }
            }
            stack_[depth_++] = {t_ + len / 2, 0.5 * (w_ + right.w) + sd_[level] * z, 0.0, false};
            has_spare_ = false;
        }
        const Node& n = stack_[--depth_];
        const double w_old = w_;
        w_ = n.w;
        t_ = target;
        spare_ = n.spare;
        has_spare_ = n.has_spare;
        if (t_ == kTop) {
            ++k_;
            t_ = 0;
            open_top();
        }
        return w_ - w_old;
    }

private:
    struct Node {
        std::uint64_t tick;
        double w;
        double spare;     // normal for the interval starting here, if already drawn
        bool has_spare;
    };

    std::uint32_t top_id() const noexcept { return static_cast<std::uint32_t>(k_); }

    void open_top() {
        depth_ = 1;
        has_spare_ = false;
        stack_[0] = {kTop, w_ + std::sqrt(H_) * s_.normals(top_id(), 0)[0], 0.0, false};
    }

    const Streams& s_;
    double H_;
    double tick_;
    std::array<double, kLevels + 1> sd_{};
    std::uint64_t k_ = 0;
    std::uint64_t t_ = 0;
    double w_ = 0.0;
    double spare_ = 0.0;
    bool has_spare_ = false;
    std::array<Node, kLevels + 2> stack_{};
    int depth_ = 0;
};

struct Envelope {
    double C = 1.0;
    double c = 0.0;
    double K = 0.0;       // value scale C (b_max + sigma^2/(2 mu))
    double theta = 0.0;   // Laplace exponent of the first passage down, at rate c
};

std::optional<Envelope> envelope_for(const ModelParams& p, const BarrierStrategy& s) {
    DiscountConstants k;
    try {
        k = discount_constants(p);
    } catch (const Error&) {
        return std::nullopt;
    }
    if (!(k.c > 0.0)) return std::nullopt;
    Envelope e;
    e.C = k.envelope_c;
    e.c = k.c;
    const double s2 = p.sigma * p.sigma;
    e.K = e.C * (std::max(s.barrier_low, s.barrier_high) + s2 / (2.0 * p.mu));
    e.theta = (p.mu + std::sqrt(p.mu * p.mu + 2.0 * e.c * s2)) / s2;
    return e;
}

/// log of a bound on E[remaining discounted cost] / D(t) as a function of the
/// distance above the relevant barrier: log_scale - rate * distance.
struct TailBound {
    bool usable = false;
    double log_scale = 0.0;
    double rate = 0.0;
    bool own_barrier = false;  // distance to this state's barrier, else to the max
};

TailBound tail_bound(const ModelParams& p, RateState eta, const std::optional<Envelope>& env) {
    TailBound b;
    const double s2 = p.sigma * p.sigma;
    if (p.intensity(eta) == 0.0 && p.rate(eta) > 0.0) {
        // absorbing state with a constant positive rate: reflection at one
        // barrier, remaining cost is exp(-A (x - b))/A
        const double A = (p.mu + std::sqrt(p.mu * p.mu + 2.0 * s2 * p.rate(eta))) / s2;
        return {true, -std::log(A), A, true};
    }
    if (env) return {true, std::log(env->C * env->K), env->theta, false};
    return b;
}

void require_valid(const BarrierStrategy& s) {
    if (!(std::isfinite(s.barrier_low) && s.barrier_low >= 0.0 && std::isfinite(s.barrier_high) &&
          s.barrier_high >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "barriers must be finite and >= 0");
    }
}

std::uint64_t unit_count(const SimConfig& c) { return c.antithetic ? c.n_paths / 2 : c.n_paths; }

Streams streams_for(const SimConfig& c, std::uint64_t unit, bool flip) {
    return {Philox4x32(c.seed), static_cast<std::uint32_t>(unit), static_cast<std::uint32_t>(unit >> 32),
            flip};
}

struct PathResult {
    double cost = 0.0;
    double tail = 0.0;   // bound on what an early stop left out
};

class ValuePath {
public:
    ValuePath(const ModelParams& p, const BarrierStrategy& s, const SimConfig& c,
              const std::optional<Envelope>& env, double horizon)
        : p_(p), s_(s), c_(c), T_(horizon) {
        K_ = std::max(0, static_cast<int>(std::lround(std::log2(16.0 / c.dt))));
        K_ = std::min(K_, kLevels);
        H_ = c.dt * std::ldexp(1.0, K_);
        dt_ticks_ = std::uint64_t{1} << (kLevels - K_);
        b_max_ = std::max(s.barrier_low, s.barrier_high);
        bound_[0] = tail_bound(p, RateState::Low, env);
        bound_[1] = tail_bound(p, RateState::High, env);
        log_tol_ = c.path_tol > 0.0 ? std::log(c.path_tol) : -std::numeric_limits<double>::infinity();
    }

    PathResult run(const Streams& st) const {
        BrownianTree w(st, H_);
        PathResult out;
        RateState eta = c_.eta0;
        double x = c_.x0;
        double log_d = 0.0;
        std::uint32_t n_switch = 0;
        double next_switch = st.holding(n_switch++, p_.intensity(eta));

        auto barrier = [&](RateState e) { return e == RateState::Low ? s_.barrier_low : s_.barrier_high; };
        auto inject = [&](double b) {
            if (x < b) {
                out.cost += (b - x) * std::exp(log_d);
                x = b;
            }
        };
        inject(barrier(eta));

        const double sig = p_.sigma;
        for (;;) {
            const double t = w.time();
            if (t >= T_) break;
            if (const TailBound& tb = bound_[eta == RateState::High]; tb.usable) {
                const double dist = x - (tb.own_barrier ? barrier(eta) : b_max_);
                const double log_rem = log_d + tb.log_scale - tb.rate * std::max(0.0, dist);
                if (log_rem < log_tol_) {
                    out.tail = std::exp(log_rem);
                    break;
                }
            }
            std::uint64_t step = dt_ticks_;
            if (c_.adaptive) {
                const double d = x - barrier(eta);
                const double room = d > 0.0 ? (d / (c_.far_field * sig)) * (d / (c_.far_field * sig)) : 0.0;
                // largest dyadic multiple of dt that is aligned, far enough from
                // the barrier, and ends before the next switch and the horizon
                const double limit = std::min({room, next_switch - t, T_ - t}) / w.tick_length();
                if (limit >= double(2 * dt_ticks_)) {
                    const auto fit = std::bit_floor(static_cast<std::uint64_t>(std::min(limit, double(kTop))));
                    step = std::min(w.max_aligned(), fit);
                }
            }
            const double t_end = w.time_after(step);
            double s = t;
            while (next_switch <= t_end) {
                log_d -= p_.rate(eta) * (next_switch - s);
                s = next_switch;
                eta = other(eta);
                inject(barrier(eta));  // lift at the switch, from the surplus at the step start
                next_switch = s + st.holding(n_switch++, p_.intensity(eta));
            }
            log_d -= p_.rate(eta) * (t_end - s);
            const double h = double(step) * w.tick_length();
            x += p_.mu * h + sig * w.advance(step);
            inject(barrier(eta));
        }
        return out;
    }

private:
    const ModelParams& p_;
    const BarrierStrategy& s_;
    const SimConfig& c_;
    double T_;
    int K_ = 0;
    double H_ = 0.0;
    std::uint64_t dt_ticks_ = 0;
    double b_max_ = 0.0;
    TailBound bound_[2];
    double log_tol_ = 0.0;
};

double discount_path(const ModelParams& p, RateState eta, double t, const Streams& st) {
    double log_d = 0.0;
    double s = 0.0;
    std::uint32_t n = 0;
    for (;;) {
        const double next = s + st.holding(n++, p.intensity(eta));
        if (next >= t) {
            log_d -= p.rate(eta) * (t - s);
            break;
        }
        log_d -= p.rate(eta) * (next - s);
        s = next;
        eta = other(eta);
    }
    return std::exp(log_d);
}

}  // namespace

void require_valid(const SimConfig& c) {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (!(std::isfinite(c.x0) && c.x0 >= 0.0)) bad("x0 must be finite and >= 0");
    if (!(std::isfinite(c.dt) && c.dt > 0.0)) bad("dt must be > 0");
    if (!std::isfinite(c.horizon)) bad("horizon must be finite");
    if (c.n_paths < 2) bad("n_paths must be >= 2");
    if (c.antithetic && c.n_paths % 2 != 0) bad("n_paths must be even with antithetic pairs");
    if (!(c.truncation_tol > 0.0)) bad("truncation_tol must be > 0");
    if (!(c.path_tol >= 0.0)) bad("path_tol must be >= 0");
    if (!(c.far_field > 0.0)) bad("far_field must be > 0");
}

unsigned worker_count(const SimConfig& c) {
    if (c.threads > 0) return c.threads;
    if (const char* env = std::getenv("BARRIER_SOLVER_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

double auto_horizon(const ModelParams& p, const BarrierStrategy& s, double tol) {
    require_valid(p);
    const auto env = envelope_for(p, s);
    if (!env) {
        throw Error(ErrorCode::InvalidConfig,
                    "no exponential discount envelope for these parameters; set horizon explicitly");
    }
    return std::max(0.0, std::log(env->C * env->K / tol) / env->c);
}

double truncation_bound(const ModelParams& p, const BarrierStrategy& s, double horizon) {
    const auto env = envelope_for(p, s);
    if (!env) return std::numeric_limits<double>::infinity();
    return env->C * std::exp(-env->c * horizon) * env->K;
}

SimEstimate simulate_value(const ModelParams& p, const BarrierStrategy& s, const SimConfig& c) {
    require_valid(p);
    require_valid(s);
    require_valid(c);
    const auto env = envelope_for(p, s);
    const double T = c.horizon > 0.0 ? c.horizon : auto_horizon(p, s, c.truncation_tol);
    const ValuePath path(p, s, c, env, T);

    const std::uint64_t units = unit_count(c);
    std::vector<double> val(units);
    std::vector<double> tail(units);
    parallel_units(units, worker_count(c), [&](std::uint64_t u) {
        if (c.antithetic) {
            const PathResult a = path.run(streams_for(c, u, false));
            const PathResult b = path.run(streams_for(c, u, true));
            val[u] = 0.5 * (a.cost + b.cost);
            tail[u] = 0.5 * (a.tail + b.tail);
        } else {
            const PathResult a = path.run(streams_for(c, u, false));
            val[u] = a.cost;
            tail[u] = a.tail;
        }
    });
    const Stats st = unit_stats(val);
    SimEstimate e;
    e.mean = st.mean;
    e.std_error = st.std_error;
    e.n_paths = c.n_paths;
    e.dt = c.dt;
    e.horizon = T;
    e.truncation_bound = truncation_bound(p, s, T) + pairwise_sum(tail) / double(units);
    return e;
}

SimEstimate simulate_discount(const ModelParams& p, RateState eta0, double t, const SimConfig& c) {
    require_valid(p);
    require_valid(c);
    if (!(t >= 0.0 && std::isfinite(t))) throw Error(ErrorCode::InvalidConfig, "t must be finite and >= 0");
    if (c.horizon > 0.0 && t > c.horizon) throw Error(ErrorCode::InvalidConfig, "t exceeds the horizon");
    SimEstimate e;
    e.n_paths = c.n_paths;
    e.horizon = t;
    if (t == 0.0) {
        e.mean = 1.0;
        return e;
    }
    const std::uint64_t units = unit_count(c);
    std::vector<double> val(units);
    parallel_units(units, worker_count(c), [&](std::uint64_t u) {
        if (c.antithetic) {
            val[u] = 0.5 * (discount_path(p, eta0, t, streams_for(c, u, false)) +
                            discount_path(p, eta0, t, streams_for(c, u, true)));
        } else {
            val[u] = discount_path(p, eta0, t, streams_for(c, u, false));
        }
    });
    const Stats st = unit_stats(val);
    e.mean = st.mean;
    e.std_error = st.std_error;
    return e;
}

std::vector<ProbeRow> optimality_probe(const ModelParams& p, double barrier,
                                       const std::vector<double>& offsets, const SimConfig& c) {
    std::vector<ProbeRow> rows;
    SimConfig cfg = c;
    cfg.x0 = 0.0;
    cfg.eta0 = RateState::Low;
    for (double o : offsets) {
        if (!(barrier + o >= 0.0)) {
            throw Error(ErrorCode::InvalidConfig, "probe offset makes the barrier negative");
        }
    }
    for (double o : offsets) {
        ProbeRow r;
        r.offset = o;
        r.barrier = barrier + o;
        r.estimate = simulate_value(p, {r.barrier, 0.0}, cfg);
        rows.push_back(r);
    }
    return rows;
}

DtBias measure_dt_bias(const ModelParams& p, const BarrierStrategy& s, const SimConfig& c) {
    DtBias b;
    SimConfig cfg = c;
    if (cfg.horizon <= 0.0) cfg.horizon = auto_horizon(p, s, c.truncation_tol);
    b.coarse = simulate_value(p, s, cfg);
    cfg.dt = 0.5 * c.dt;
    b.fine = simulate_value(p, s, cfg);
    b.allowance = 3.0 * std::abs(b.fine.mean - b.coarse.mean);
    return b;
}

}  // namespace barrier_solver

#include "barrier_solver/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace barrier_solver {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) bad(where + ": expected an object");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    require_object(j, where);
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) bad(where + ": unknown key \"" + key + "\"");
    }
}

double number(const json& j, const char* key, const std::string& where) {
    const json& v = j.at(key);
    if (!v.is_number()) bad(where + "." + key + ": expected a number");
    return v.get<double>();
}

double number_or(const json& j, const char* key, double def, const std::string& where) {
    return j.contains(key) ? number(j, key, where) : def;
}

long long integer_or(const json& j, const char* key, long long def, const std::string& where) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number_integer()) bad(where + "." + key + ": expected an integer");
    return v.get<long long>();
}

bool boolean_or(const json& j, const char* key, bool def, const std::string& where) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_boolean()) bad(where + "." + key + ": expected true or false");
    return v.get<bool>();
}

std::vector<double> numbers_or(const json& j, const char* key, const std::string& where) {
    std::vector<double> out;
    if (!j.contains(key)) return out;
    const json& v = j.at(key);
    if (!v.is_array()) bad(where + "." + key + ": expected an array of numbers");
    for (const json& e : v) {
        if (!e.is_number()) bad(where + "." + key + ": expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

void positive(double v, const std::string& name) {
    if (!(v > 0.0)) bad(name + " must be > 0");
}

RateState rate_state(const json& v, const std::string& where) {
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "low") return RateState::Low;
        if (s == "high") return RateState::High;
    }
    bad(where + ": expected \"low\" or \"high\"");
}

json constants_json(const V0Result& r) {
    if (const auto* k = std::get_if<V0Constants>(&r.constants)) {
        return {{"a", k->a},   {"alpha", k->alpha}, {"D1", k->D1}, {"D2", k->D2},
                {"A1", k->A1}, {"A2", k->A2},       {"E", k->E},   {"F", k->F},
                {"B1", k->B1}, {"B2", k->B2},       {"C1", k->C1}, {"C2", k->C2}};
    }
    return {{"A", std::get<V0ConstantsLambda2Zero>(r.constants).A}};
}

json state_json(const StateResidual& s) {
    return {{"max_violation", s.max_violation}, {"min_r1", s.min_r1}, {"min_r2", s.min_r2},
            {"worst_x", s.worst_x}};
}

}  // namespace

json to_json(const PiecewiseExpPoly& f) {
    json pieces = json::array();
    for (const auto& piece : f.pieces()) {
        json terms = json::array();
        for (const auto& t : piece) terms.push_back({{"c", t.coeff}, {"k", t.power}, {"theta", t.rate}});
        pieces.push_back(std::move(terms));
    }
    return {{"breakpoints", f.breakpoints()}, {"pieces", std::move(pieces)}};
}

PiecewiseExpPoly function_from_json(const json& j) {
    check_keys(j, {"breakpoints", "pieces"}, "function");
    if (!j.contains("breakpoints") || !j.contains("pieces")) bad("function: breakpoints and pieces required");
    const std::vector<double> bps = numbers_or(j, "breakpoints", "function");
    const json& pj = j.at("pieces");
    if (!pj.is_array()) bad("function.pieces: expected an array");
    std::vector<ExpPolyPiece> pieces;
    for (const json& piece : pj) {
        if (!piece.is_array()) bad("function.pieces: each piece must be an array of terms");
        ExpPolyPiece terms;
        for (const json& t : piece) {
            check_keys(t, {"c", "k", "theta"}, "function term");
            if (!t.contains("c") || !t.contains("k") || !t.contains("theta")) {
                bad("function term: c, k and theta required");
            }
            const long long k = integer_or(t, "k", 0, "function term");
            if (k < 0 || k > 100000) bad("function term: k must be a nonnegative integer");
            terms.push_back({number(t, "c", "function term"), static_cast<int>(k),
                             number(t, "theta", "function term")});
        }
        pieces.push_back(std::move(terms));
    }
    try {
        return PiecewiseExpPoly(bps, std::move(pieces));
    } catch (const Error& e) {
        bad(std::string("function: ") + e.what());
    }
}

json to_json(const ModelParams& p) {
    return {{"mu", p.mu},           {"sigma", p.sigma},     {"delta1", p.delta1},
            {"delta2", p.delta2},   {"lambda1", p.lambda1}, {"lambda2", p.lambda2},
            {"mode", std::string(to_string(p.mode))}};
}

ModelParams params_from_json(const json& j) {
    const std::string w = "params";
    check_keys(j, {"mu", "sigma", "delta1", "delta2", "lambda1", "lambda2", "mode"}, w);
    ModelParams p;
    for (const char* key : {"mu", "sigma", "delta1", "delta2", "lambda1", "lambda2"}) {
        if (!j.contains(key)) bad(w + "." + key + " is required");
    }
    p.mu = number(j, "mu", w);
    p.sigma = number(j, "sigma", w);
    p.delta1 = number(j, "delta1", w);
    p.delta2 = number(j, "delta2", w);
    p.lambda1 = number(j, "lambda1", w);
    p.lambda2 = number(j, "lambda2", w);
    if (j.contains("mode")) {
        const json& m = j.at("mode");
        if (m == "strict") {
            p.mode = ValidationMode::Strict;
        } else if (m == "relaxed") {
            p.mode = ValidationMode::Relaxed;
        } else {
            bad(w + ".mode: expected \"strict\" or \"relaxed\"");
        }
    }
    return p;
}

json to_json(const V0Result& r) {
    return {{"constants", constants_json(r)},
            {"d2_low_at_0", r.d2_low_at_0},
            {"d2_high_at_0", r.d2_high_at_0},
            {"optimal_low", r.optimal_low},
            {"optimal_high", r.optimal_high},
            {"optimal", r.optimal},
            {"v_low", to_json(r.v_low)},
            {"v_high", to_json(r.v_high)}};
}

json to_json(const HjbReport& r) {
    return {{"tol", r.tol},
            {"max_violation", r.max_violation},
            {"passed", r.passed},
            {"low", state_json(r.low)},
            {"high", state_json(r.high)}};
}

json to_json(const Solution& s) {
    json hist = json::array();
    for (const auto& h : s.history) {
        auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
        hist.push_back({{"n", h.n},
                        {"barrier", h.barrier},
                        {"sup_delta", num(h.sup_delta)},
                        {"barrier_delta", num(h.barrier_delta)},
                        {"barrier_step", h.barrier_step},
                        {"min_gap", h.min_gap},
                        {"terms", h.terms}});
    }
    return {{"barrier", s.barrier},
            {"iterations", s.iterations},
            {"x_max", s.x_max},
            {"lambda2_fixed_point", s.lambda2_fixed_point},
            {"residual_report", to_json(s.residual_report)},
            {"v_low", to_json(s.v_low)},
            {"v_high", to_json(s.v_high)},
            {"history", std::move(hist)}};
}

json to_json(const SimEstimate& e) {
    return {{"mean", e.mean},
            {"stderr", e.std_error},
            {"n_paths", e.n_paths},
            {"truncation_bound", e.truncation_bound},
            {"dt", e.dt},
            {"horizon", e.horizon}};
}

std::string format_scalar(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os_ << ',';
        const std::string& f = fields[i];
        if (f.find_first_of(",\"\r\n") == std::string::npos) {
            os_ << f;
            continue;
        }
        os_ << '"';
        for (char ch : f) {
            if (ch == '"') os_ << '"';
            os_ << ch;
        }
        os_ << '"';
    }
    os_ << "\r\n";
}

void CsvWriter::row(const std::vector<double>& fields) {
    std::vector<std::string> s;
    s.reserve(fields.size());
    for (double v : fields) s.push_back(format_scalar(v));
    row(s);
}

void write_value_curve(std::ostream& os, const PiecewiseExpPoly& v_low,
                       const PiecewiseExpPoly& v_high, const std::vector<double>& grid) {
    CsvWriter w(os);
    w.row(std::vector<std::string>{"x", "vLow", "vLow_d1", "vLow_d2", "vHigh", "vHigh_d1", "vHigh_d2"});
    for (double x : grid) {
        w.row(std::vector<double>{x, v_low.eval(x, 0), v_low.eval(x, 1), v_low.eval(x, 2),
                                  v_high.eval(x, 0), v_high.eval(x, 1), v_high.eval(x, 2)});
    }
}

RunConfig run_config_from_json(const json& j) {
    check_keys(j, {"params", "solve", "v0", "simulate", "example", "output"}, "config");
    RunConfig rc;
    if (j.contains("params")) rc.params = params_from_json(j.at("params"));

    if (j.contains("solve")) {
        const json& s = j.at("solve");
        const std::string w = "solve";
        check_keys(s, {"tol", "max_iter", "grid_points", "tol_hjb"}, w);
        rc.solve.tol = number_or(s, "tol", rc.solve.tol, w);
        rc.solve.max_iter = static_cast<int>(integer_or(s, "max_iter", rc.solve.max_iter, w));
        rc.solve.grid_points = static_cast<int>(integer_or(s, "grid_points", rc.solve.grid_points, w));
        rc.solve.tol_hjb = number_or(s, "tol_hjb", rc.solve.tol_hjb, w);
    }
    positive(rc.solve.tol, "solve.tol");
    positive(rc.solve.tol_hjb, "solve.tol_hjb");
    if (rc.solve.max_iter < 1) bad("solve.max_iter must be >= 1");
    if (rc.solve.grid_points < 2) bad("solve.grid_points must be >= 2");

    if (j.contains("v0")) {
        const json& v = j.at("v0");
        check_keys(v, {"grid"}, "v0");
        if (v.contains("grid")) {
            const json& g = v.at("grid");
            check_keys(g, {"x_max", "points"}, "v0.grid");
            rc.v0.x_max = number_or(g, "x_max", rc.v0.x_max, "v0.grid");
            rc.v0.points = static_cast<int>(integer_or(g, "points", rc.v0.points, "v0.grid"));
        }
    }
    positive(rc.v0.x_max, "v0.grid.x_max");
    if (rc.v0.points < 2) bad("v0.grid.points must be >= 2");

    if (j.contains("simulate")) {
        const json& s = j.at("simulate");
        const std::string w = "simulate";
        check_keys(s, {"x0", "eta0", "dt", "horizon", "n_paths", "seed", "antithetic", "truncation_tol",
                       "path_tol", "strategy", "discount_check", "probe"},
                   w);
        SimConfig& c = rc.simulate.config;
        c.x0 = number_or(s, "x0", c.x0, w);
        if (s.contains("eta0")) c.eta0 = rate_state(s.at("eta0"), w + ".eta0");
        c.dt = number_or(s, "dt", c.dt, w);
        c.horizon = number_or(s, "horizon", c.horizon, w);
        const long long n = integer_or(s, "n_paths", static_cast<long long>(c.n_paths), w);
        if (n < 2) bad("simulate.n_paths must be >= 2");
        c.n_paths = static_cast<std::uint64_t>(n);
        if (s.contains("seed")) {
            const json& seed = s.at("seed");
            if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
                bad("simulate.seed: expected a nonnegative integer");
            }
            c.seed = seed.get<std::uint64_t>();
        }
        c.antithetic = boolean_or(s, "antithetic", c.antithetic, w);
        c.truncation_tol = number_or(s, "truncation_tol", c.truncation_tol, w);
        c.path_tol = number_or(s, "path_tol", c.path_tol, w);
        if (s.contains("strategy")) {
            const json& st = s.at("strategy");
            check_keys(st, {"barrier_low", "barrier_high"}, "simulate.strategy");
            BarrierStrategy b;
            b.barrier_low = number_or(st, "barrier_low", 0.0, "simulate.strategy");
            b.barrier_high = number_or(st, "barrier_high", 0.0, "simulate.strategy");
            rc.simulate.strategy = b;
        }
        if (s.contains("discount_check")) {
            const json& d = s.at("discount_check");
            check_keys(d, {"t"}, "simulate.discount_check");
            rc.simulate.discount_times = numbers_or(d, "t", "simulate.discount_check");
        }
        if (s.contains("probe")) {
            const json& pr = s.at("probe");
            check_keys(pr, {"offsets"}, "simulate.probe");
            rc.simulate.probe_offsets = numbers_or(pr, "offsets", "simulate.probe");
        }
        positive(c.dt, "simulate.dt");
        positive(c.truncation_tol, "simulate.truncation_tol");
        positive(c.path_tol, "simulate.path_tol");
        require_valid(c);
    }

    if (j.contains("example")) check_keys(j.at("example"), {}, "example");

    if (j.contains("output")) {
        const json& o = j.at("output");
        check_keys(o, {"dir", "formats"}, "output");
        if (o.contains("dir")) {
            if (!o.at("dir").is_string()) bad("output.dir: expected a string");
            rc.output.dir = o.at("dir").get<std::string>();
        }
        if (o.contains("formats")) {
            const json& f = o.at("formats");
            if (!f.is_array()) bad("output.formats: expected an array");
            rc.output.csv = rc.output.json = false;
            for (const json& e : f) {
                if (e == "csv") {
                    rc.output.csv = true;
                } else if (e == "json") {
                    rc.output.json = true;
                } else {
                    bad("output.formats: allowed values are \"csv\" and \"json\"");
                }
            }
        }
    }
    return rc;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        bad(path + ": " + e.what());
    }
}

RecursionOptions recursion_options(const SolveBlock& b) {
    RecursionOptions o;
    o.tol = b.tol;
    o.max_iter = b.max_iter;
    o.grid_points = b.grid_points;
    o.tol_hjb = b.tol_hjb;
    return o;
}

}  // namespace barrier_solver

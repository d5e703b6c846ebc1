#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "barrier_solver/closed_form.hpp"
#include "barrier_solver/exppoly.hpp"
#include "barrier_solver/model.hpp"
#include "barrier_solver/recursion.hpp"
#include "barrier_solver/simulator.hpp"

namespace barrier_solver {

using json = nlohmann::json;

/// {"breakpoints": [...], "pieces": [[{"c": .., "k": .., "theta": ..}, ...], ...]}
[[nodiscard]] json to_json(const PiecewiseExpPoly& f);
[[nodiscard]] PiecewiseExpPoly function_from_json(const json& j);

[[nodiscard]] json to_json(const ModelParams& p);
[[nodiscard]] ModelParams params_from_json(const json& j);

[[nodiscard]] json to_json(const V0Result& r);
[[nodiscard]] json to_json(const HjbReport& r);
[[nodiscard]] json to_json(const Solution& s);
[[nodiscard]] json to_json(const SimEstimate& e);

/// Scalars as written to CSV: 17 significant digits.
[[nodiscard]] std::string format_scalar(double v);

/// RFC 4180 writer: CRLF line ends, fields quoted only when needed.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}
    void row(const std::vector<std::string>& fields);
    void row(const std::vector<double>& fields);

private:
    std::ostream& os_;
};

/// x, vLow, vLow_d1, vLow_d2, vHigh, vHigh_d1, vHigh_d2
void write_value_curve(std::ostream& os, const PiecewiseExpPoly& v_low,
                       const PiecewiseExpPoly& v_high, const std::vector<double>& grid);

struct SolveBlock {
    double tol = 1e-9;
    int max_iter = 200;
    int grid_points = 2001;
    double tol_hjb = 1e-7;
};

struct V0Block {
    double x_max = 8.0;
    int points = 801;
};

struct SimulateBlock {
    SimConfig config;
    std::optional<BarrierStrategy> strategy;  // unset: barrier from solve
    std::vector<double> discount_times;       // discount check block, may be empty
    std::vector<double> probe_offsets;        // optimality probe, may be empty
};

struct OutputBlock {
    std::string dir = ".";
    bool csv = true;
    bool json = true;
};

/// Parsed run configuration. Unknown keys anywhere are rejected.
struct RunConfig {
    std::optional<ModelParams> params;
    SolveBlock solve;
    V0Block v0;
    SimulateBlock simulate;
    OutputBlock output;
};

[[nodiscard]] RunConfig run_config_from_json(const json& j);
[[nodiscard]] json read_json_file(const std::string& path);

[[nodiscard]] RecursionOptions recursion_options(const SolveBlock& b);

}  // namespace barrier_solver

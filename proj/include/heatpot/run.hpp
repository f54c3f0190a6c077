// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace heatpot {

// One invocation of the tool, shared by every subcommand. Exponents that may
// sit on a measure-zero boundary travel as strings and accept decimals or
// exact fractions ("11/4"); zero-valued knobs mean "use the command's
// default". Empty paths are derived from the output directory.
struct RunConfig {
    std::string command;     // classify, bounds, potential, maximal, check,
                             // blowup, rates, constants
    std::string check_name;  // check only: layer-cake, hedberg, sobolev,
                             // maximal, weak-maximal, nonlinear

    int n = 1;
    std::string lambda;  // first coupling exponent
    std::string sigma;   // second coupling exponent
    std::string gamma;   // bounds only: defect power of 1/sqrt(t)

    double alpha = 2.0;  // kernel power parameter
    double beta = 2.0;   // nonlinear check: inner kernel power
    double p = 0.0;      // Lebesgue exponent; 0 = per-check default
    double r = 1.0;      // nonlinear check: norm exponent

    int trials = 100;  // layer-cake trials
    int count = 8;     // corpus size
    unsigned seed = 1; // sole source of randomness

    std::string region;     // blowup: B (tower) or C (coupled pair)
    std::string phi;        // rate target: t, sqrt, log, custom-table
    std::string phi_table;  // custom-table: CSV of t,value nodes
    int bumps = 0;          // windows to build; 0 = command default
    double t1 = 0.0;        // seed time; 0 = construction default
    int samples = 0;          // certificate samples per window
    int ambient_samples = 0;  // certificate samples off the windows

    int cells = 0;          // grid cells per spatial axis
    int time_cells = 0;     // grid cells in time
    double quad_tol = 0.0;  // quadrature relative tolerance
    int quad_depth = 0;     // quadrature subdivision cap

    std::string out_dir;        // default: $HEATPOT_OUT_DIR, else "."
    std::string report_path;    // default: <out_dir>/<command>_report.json
    std::string trace_path;     // default: <out_dir>/<command>_trace.csv
    std::string snapshot_path;  // grid snapshot; empty = none
};

// Overlays one JSON object onto cfg. Keys mirror the long flag names;
// unknown keys are rejected. The fraction-capable fields accept JSON numbers
// as well as strings.
void apply_config_json(const std::string& text, RunConfig& cfg);

// Parses a full argument list (program name excluded). A --config FILE
// argument seeds the config before the remaining flags override it. Returns
// nullopt with `help` filled when help was requested; throws
// std::invalid_argument on usage errors.
std::optional<RunConfig> parse_args(const std::vector<std::string>& args, std::string& help);

// Executes one config: writes the JSON report (plus CSV trace and grid
// snapshot where the command has them), echoes the report to `out`, and
// returns the exit code. 0: pass. 1: usage or parameter error, diagnosed on
// `err`. 2: a certified check ran and failed. Reports carry no timestamps,
// so identical configs produce identical bytes.
int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Full driver: parse_args against argv, then run_command on stdout/stderr.
int run_main(int argc, const char* const* argv);

}  // namespace heatpot

#pragma once

// Batch runs behind the command-line subcommands. Every run turns a RunConfig into a
// CsvDocument whose metadata carries the resolved configuration, so feeding that
// metadata back through config_from_metadata reproduces the document exactly.

#include <optional>
#include <string>
#include <vector>

#include "dyncomp/calibration.hpp"
#include "dyncomp/harness/config.hpp"
#include "dyncomp/harness/csv.hpp"
#include "dyncomp/sizing.hpp"

namespace dyncomp::harness {

inline constexpr const char* kToolName = "dyncomp-sim";
inline constexpr const char* kToolVersion = "1.0.0";

struct SweepRow {
    std::string label;  // swept value as written to the table
    double value = 0.0; // numeric swept value; NaN for corners
    int decision = 0;
    double t_dm = 0.0;
    double t_esd = 0.0;
    double power = 0.0;
    double energy = 0.0;
    bool late = false;
    std::optional<double> energy_noshutdown;
    std::optional<double> power_noshutdown;
    std::optional<double> savings_pct;
    std::string status = "ok";
};

struct SweepTable {
    std::string variable;
    std::string column;  // unit-suffixed column name of the swept value
    bool both_modes = false;
    std::vector<SweepRow> rows;
};

/// Sweep variables understood by run_sweep.
const std::vector<std::string>& sweep_variables();

/// Grid values for the configured sweep, with per-variable defaults filled in.
/// Throws RangeError (key start/stop/points/scale/variable) for unphysical grids.
std::vector<double> sweep_grid(const RunConfig& config);

/// Evaluates the engine at every grid point. Engine errors become flagged rows.
SweepTable run_sweep(const RunConfig& config, unsigned threads = 1);

/// Single evaluation at the configured operating point.
SweepTable run_point(const RunConfig& config);

CsvDocument sweep_document(const SweepTable& table, const RunConfig& config,
                           const std::string& command);
SweepTable sweep_from_document(const CsvDocument& doc);

struct MonteCarloReport {
    OffsetStats before;
    std::optional<OffsetStats> after;
    double pelgrom_sigma = 0.0;
};

MonteCarloReport run_montecarlo(const RunConfig& config, unsigned threads = 1);
CsvDocument montecarlo_document(const MonteCarloReport& report, const RunConfig& config);

/// Mismatch used by the calibrate subcommand: injected deltas when any are set,
/// otherwise the sampled trial, otherwise none.
MismatchSample calibration_mismatch(const RunConfig& config);
CalibrationResult run_calibrate(const RunConfig& config);
CsvDocument calibration_document(const CalibrationResult& result, const RunConfig& config);

struct SizeReport {
    SizingVars solution;
    double normalized_residual = 0.0;
    double geometry_residual = 0.0;  // F/(A/V^2) for the configured widths
    bool latch_ratio_ok = false;
};

SizeReport run_size(const RunConfig& config);
CsvDocument size_document(const SizeReport& report, const RunConfig& config);

/// Common metadata prefix: tool, version, command, seed, resolved configuration, warnings.
std::vector<std::pair<std::string, std::string>> base_metadata(const RunConfig& config,
                                                               const std::string& command);

/// Re-runs the command recorded in `doc` and returns the regenerated document.
CsvDocument replay(const CsvDocument& doc, unsigned threads = 1);

}  // namespace dyncomp::harness

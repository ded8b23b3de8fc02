#pragma once

// One-page performance summary built purely from result tables, so a report
// regenerated from saved CSV files matches the one produced by a live run.

#include <string>
#include <vector>

#include "dyncomp/harness/config.hpp"
#include "dyncomp/harness/csv.hpp"

namespace dyncomp::harness {

struct ReportInputs {
    CsvDocument typical;             // single point at vid = 1 mV and the report frequency
    std::vector<CsvDocument> grid;   // standard sweeps with both shutdown modes
    CsvDocument montecarlo;          // uncalibrated and calibrated offset statistics
};

/// Variables of the standard sweep grid, in report order.
const std::vector<std::string>& report_grid_variables();

ReportInputs run_report_inputs(const RunConfig& config, unsigned threads = 1);

/// Writes typical.csv, sweep_<variable>.csv and mc.csv into `dir` (which must exist).
void save_report_inputs(const ReportInputs& inputs, const std::string& dir);
ReportInputs load_report_inputs(const std::string& dir);

/// Two-column table (quantity, value). Savings of 0 when shutdown is disabled.
CsvDocument report_document(const ReportInputs& inputs);

}  // namespace dyncomp::harness

#pragma once

// Time-domain offset cancellation by body tuning of the input pair.
//
// Each cycle the comparator resolves a zero differential input; the output state
// detector turns that decision into the sign bit S, and a charge pump gated by the
// DAC voltage removes I*T/Cb from one body capacitor. The DAC output falls with the
// cycle count, so the correction steps shrink and the loop behaves like a
// successive approximation on the body-voltage difference.

#include <cstdint>
#include <optional>
#include <vector>

#include "dyncomp/comparator.hpp"

namespace dyncomp {

struct CalibrationConfig {
    int n_cycles = 6;
    double cb = 1e-12;    // F, body storage capacitor
    double c0 = 100e-15;  // F, DAC reference capacitor
    /// Unit capacitors of the DAC; counter code k connects the first k of them to C0.
    std::vector<double> dac_caps = {26e-15, 26e-15, 26e-15, 26e-15, 26e-15, 26e-15};
    double cp_beta = 90e-6;  // A/V^2, charge-pump device
    double cp_vthn = 0.45;   // V
    double t_period = 1.0 / 333e6;
    /// Common input level during calibration; vdd/2 when unset.
    std::optional<double> v_ref_input;
    /// Number of consecutive calibration phases (DAC precharged between phases).
    int phases = 1;

    void validate() const;
};

/// Binary-weighted ladder (C0 = 100 fF; 25, 25, 50, 100, 200, 400 fF selected
/// cumulatively) whose DAC levels are vdd * {0.8, 0.667, 0.5, 0.333, 0.2, 0.111}.
CalibrationConfig binary_weighted_ladder();

/// 3-bit counter output for a cycle number (1-based).
int counter_code(int cycle);

/// vdd * c0 / (c0 + selected caps) for an explicit counter code.
double dac_output_for_code(int code, const CalibrationConfig& cal, double vdd);

/// DAC output during `cycle` (1..n_cycles).
double dac_output(int cycle, const CalibrationConfig& cal, double vdd);

/// Body-voltage decrement for one cycle: (cp_beta/2)*max(0, daco - cp_vthn)^2 * T / cb.
double cp_step(double daco, const CalibrationConfig& cal, double t_period);

struct OffsetSearch {
    double tol = 10e-6;  // V
    double span = 0.1;   // V, search over [-span, +span]
};

struct OffsetMeasurement {
    double offset = 0.0;
    int iterations = 0;
};

/// Input-referred offset: the differential input at which the decision flips from
/// -1 to +1, located by bisection. Throws SpanError if no flip lies inside the span.
OffsetMeasurement locate_offset(const Comparator& engine, const OperatingPoint& op,
                                const MismatchSample& mismatch, const BodyBias& body,
                                const OffsetSearch& search = {});

double measure_offset(const Comparator& engine, const OperatingPoint& op,
                      const MismatchSample& mismatch, const BodyBias& body,
                      const OffsetSearch& search = {});

struct CalibrationStep {
    int phase = 1;
    int cycle = 0;
    int tn = 0;
    double daco = 0.0;
    double step = 0.0;
    int s = 0;
    double vb_plus = 0.0;   // after the correction
    double vb_minus = 0.0;  // after the correction
};

struct CalibrationState {
    double vb_plus = 0.0;
    double vb_minus = 0.0;
    int cycle = 0;
    int tn = 0;
    double daco = 0.0;
    int s = 0;
    bool saturated = false;
    std::vector<CalibrationStep> history;
};

struct CalibrationResult {
    CalibrationState state;
    double offset_before = 0.0;
    double offset_after = 0.0;
    double bound = 0.0;
    bool converged = false;
};

/// Final-step size times the offset sensitivity to body voltage.
double residual_bound(double final_step, double offset_per_body_volt);

/// |d(offset)/d(vb)| at vb = vdd for the operating point's devices.
double offset_body_sensitivity(const Comparator& engine, const OperatingPoint& op);

/// Post-convergence residual ceiling for the configured loop.
double residual_bound(const CalibrationConfig& cal, const Comparator& engine,
                      const OperatingPoint& op);

/// Runs the calibration phase(s) for one mismatch instance. `op` supplies the corner,
/// temperature and supply; the loop itself drives both inputs to v_ref_input.
CalibrationResult run_calibration(const Comparator& engine, const OperatingPoint& op,
                                  const MismatchSample& mismatch, const CalibrationConfig& cal,
                                  const OffsetSearch& search = {});

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;

    double bin_width() const { return counts.empty() ? 0.0 : (hi - lo) / counts.size(); }
};

/// Equal-width bins over [min, max] of the data. Identical values collapse to one bin.
Histogram make_histogram(const std::vector<double>& values, std::size_t bins);

struct OffsetStats {
    std::size_t n = 0;  // requested trials
    std::size_t failed = 0;
    std::size_t converged = 0;  // only meaningful for calibrated runs
    double mean = 0.0;
    double sigma = 0.0;
    Histogram histogram;
    std::vector<double> offsets;            // successful trials, trial order
    std::vector<std::size_t> failed_trials;
};

struct MonteCarloOptions {
    std::uint64_t seed = 1;
    std::size_t trials = 500;
    bool calibrate = false;
    MismatchModel mismatch;
    OffsetSearch search;
    std::size_t bins = 25;
    unsigned threads = 1;
};

/// Offset statistics over independent mismatch trials. Trial i uses
/// sample_mismatch(seed, i); results do not depend on the number of threads.
OffsetStats monte_carlo(const Comparator& engine, const OperatingPoint& op,
                        const CalibrationConfig& cal, const MonteCarloOptions& options);

/// sqrt(2) * A_VT / sqrt(W*L) of the input devices.
double pelgrom_pair_sigma(const GeometrySet& geoms, const MismatchModel& model);

}  // namespace dyncomp

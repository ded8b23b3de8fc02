#include "dyncomp/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "dyncomp/errors.hpp"
#include "dyncomp/parallel.hpp"

namespace dyncomp {

void CalibrationConfig::validate() const {
    if (n_cycles < 1) throw RangeError("n_cycles", "must be >= 1");
    if (n_cycles > 7) throw RangeError("n_cycles", "3-bit counter supports at most 7 cycles");
    if (static_cast<std::size_t>(n_cycles) > dac_caps.size()) {
        throw RangeError("dac_caps", "needs at least n_cycles capacitors");
    }
    if (!(cb > 0.0)) throw RangeError("cb", "must be > 0");
    if (!(c0 > 0.0)) throw RangeError("c0", "must be > 0");
    for (double c : dac_caps) {
        if (!(c > 0.0)) throw RangeError("dac_caps", "every capacitor must be > 0");
    }
    if (!(cp_beta > 0.0)) throw RangeError("cp_beta", "must be > 0");
    if (!(cp_vthn >= 0.0)) throw RangeError("cp_vthn", "must be >= 0");
    if (!(t_period > 0.0)) throw RangeError("t_period", "must be > 0");
    if (v_ref_input && !(*v_ref_input >= 0.0)) throw RangeError("v_ref_input", "must be >= 0");
    if (phases < 1) throw RangeError("phases", "must be >= 1");
}

CalibrationConfig binary_weighted_ladder() {
    CalibrationConfig cal;
    cal.c0 = 100e-15;
    cal.dac_caps = {25e-15, 25e-15, 50e-15, 100e-15, 200e-15, 400e-15};
    return cal;
}

int counter_code(int cycle) { return cycle & 0x7; }

double dac_output_for_code(int code, const CalibrationConfig& cal, double vdd) {
    const auto k = static_cast<std::size_t>(std::clamp(code, 0, static_cast<int>(cal.dac_caps.size())));
    double selected = 0.0;
    for (std::size_t i = 0; i < k; ++i) selected += cal.dac_caps[i];
    if (selected == 0.0) return vdd;
    return vdd * cal.c0 / (cal.c0 + selected);
}

double dac_output(int cycle, const CalibrationConfig& cal, double vdd) {
    if (cycle < 1 || cycle > cal.n_cycles) throw RangeError("cycle", "must be in [1, n_cycles]");
    return dac_output_for_code(counter_code(cycle), cal, vdd);
}

double cp_step(double daco, const CalibrationConfig& cal, double t_period) {
    if (!(daco >= 0.0)) throw RangeError("daco", "must be >= 0");
    const double ov = std::max(0.0, daco - cal.cp_vthn);
    const double current = 0.5 * cal.cp_beta * ov * ov;
    return current * t_period / cal.cb;
}

namespace {

int decide(const Comparator& engine, const OperatingPoint& op, double vid,
           const MismatchSample& mismatch, const BodyBias& body) {
    OperatingPoint at = op;
    at.vid = vid;
    return engine.simulate(at, mismatch, body).decision;
}

}  // namespace

OffsetMeasurement locate_offset(const Comparator& engine, const OperatingPoint& op,
                                const MismatchSample& mismatch, const BodyBias& body,
                                const OffsetSearch& search) {
    if (!(search.tol > 0.0)) throw RangeError("tol_os", "must be > 0");
    if (!(search.span > 0.0)) throw RangeError("v_span", "must be > 0");

    double lo = -search.span;
    double hi = search.span;
    if (decide(engine, op, lo, mismatch, body) > 0 || decide(engine, op, hi, mismatch, body) < 0) {
        throw SpanError("offset exceeds the +/-" + std::to_string(search.span * 1e3) +
                        " mV search span");
    }
    OffsetMeasurement m;
    while (hi - lo > 2.0 * search.tol) {
        const double mid = 0.5 * (lo + hi);
        if (decide(engine, op, mid, mismatch, body) > 0) {
            hi = mid;
        } else {
            lo = mid;
        }
        ++m.iterations;
    }
    m.offset = 0.5 * (lo + hi);
    return m;
}

double measure_offset(const Comparator& engine, const OperatingPoint& op,
                      const MismatchSample& mismatch, const BodyBias& body,
                      const OffsetSearch& search) {
    return locate_offset(engine, op, mismatch, body, search).offset;
}

double residual_bound(double final_step, double offset_per_body_volt) {
    return std::abs(final_step) * std::abs(offset_per_body_volt);
}

double offset_body_sensitivity(const Comparator& engine, const OperatingPoint& op) {
    // With matched devices the flip point sits where vid = vth(Mp4) - vth(Mp5), so
    // the body shift maps one-to-one into input-referred volts.
    const auto dev = engine.devices_at(op);
    return threshold_slope(dev.pmos, 0.0);
}

double residual_bound(const CalibrationConfig& cal, const Comparator& engine,
                      const OperatingPoint& op) {
    const double vdd = op.vdd(engine.config());
    const double final_step = cp_step(dac_output(cal.n_cycles, cal, vdd), cal, cal.t_period);
    return residual_bound(final_step, offset_body_sensitivity(engine, op));
}

CalibrationResult run_calibration(const Comparator& engine, const OperatingPoint& op,
                                  const MismatchSample& mismatch, const CalibrationConfig& cal,
                                  const OffsetSearch& search) {
    cal.validate();
    const double vdd = op.vdd(engine.config());

    CalibrationResult result;
    CalibrationState& st = result.state;
    st.vb_plus = vdd;
    st.vb_minus = vdd;

    result.offset_before = measure_offset(engine, op, mismatch, {vdd, vdd}, search);

    OperatingPoint zero_input = op;
    zero_input.vid = 0.0;
    zero_input.vcm = cal.v_ref_input.value_or(0.5 * vdd);

    for (int phase = 1; phase <= cal.phases; ++phase) {
        for (int cycle = 1; cycle <= cal.n_cycles; ++cycle) {
            st.cycle = cycle;
            st.tn = counter_code(cycle);
            st.daco = dac_output(cycle, cal, vdd);
            st.s = engine.simulate(zero_input, mismatch, BodyBias{st.vb_plus, st.vb_minus}).decision;
            const double step = cp_step(st.daco, cal, cal.t_period);

            // S = 1: Out- is ahead, so speed up Mp5 by lowering its body.
            double& target = st.s > 0 ? st.vb_plus : st.vb_minus;
            target -= step;
            if (target < 0.0) {
                target = 0.0;
                st.saturated = true;
            }
            st.history.push_back({phase, cycle, st.tn, st.daco, step, st.s, st.vb_plus, st.vb_minus});
        }
    }

    result.offset_after = measure_offset(engine, op, mismatch, {st.vb_plus, st.vb_minus}, search);
    result.bound = residual_bound(cal, engine, op);
    result.converged = std::abs(result.offset_after) <= result.bound;
    return result;
}

Histogram make_histogram(const std::vector<double>& values, std::size_t bins) {
    Histogram h;
    if (values.empty() || bins == 0) return h;
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    h.lo = *mn;
    h.hi = *mx;
    if (h.lo == h.hi) {
        h.counts = {values.size()};
        return h;
    }
    h.counts.assign(bins, 0);
    const double width = (h.hi - h.lo) / static_cast<double>(bins);
    for (double v : values) {
        auto idx = static_cast<std::size_t>((v - h.lo) / width);
        ++h.counts[std::min(idx, bins - 1)];
    }
    return h;
}

OffsetStats monte_carlo(const Comparator& engine, const OperatingPoint& op,
                        const CalibrationConfig& cal, const MonteCarloOptions& options) {
    if (options.trials < 1) throw RangeError("trials", "must be >= 1");
    if (options.calibrate) cal.validate();

    struct Trial {
        double offset = 0.0;
        bool ok = false;
        bool converged = false;
    };
    std::vector<Trial> trials(options.trials);
    const auto& geoms = engine.config().geoms.devices();
    const double vdd = op.vdd(engine.config());

    parallel_for(options.trials, options.threads, [&](std::size_t i) {
        const auto mismatch = sample_mismatch(options.seed, i, geoms, options.mismatch.avt,
                                              options.mismatch.abeta);
        Trial& t = trials[i];
        try {
            if (options.calibrate) {
                const auto r = run_calibration(engine, op, mismatch, cal, options.search);
                t.offset = r.offset_after;
                t.converged = r.converged;
            } else {
                t.offset = measure_offset(engine, op, mismatch, {vdd, vdd}, options.search);
            }
            t.ok = true;
        } catch (const Error&) {
            t.ok = false;
        }
    });

    OffsetStats stats;
    stats.n = options.trials;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        if (trials[i].ok) {
            stats.offsets.push_back(trials[i].offset);
            if (trials[i].converged) ++stats.converged;
        } else {
            stats.failed_trials.push_back(i);
        }
    }
    stats.failed = stats.failed_trials.size();

    // Sequential sums in trial order keep the statistics independent of scheduling.
    if (!stats.offsets.empty()) {
        const double count = static_cast<double>(stats.offsets.size());
        double sum = 0.0;
        for (double v : stats.offsets) sum += v;
        stats.mean = sum / count;
        double ss = 0.0;
        for (double v : stats.offsets) ss += (v - stats.mean) * (v - stats.mean);
        stats.sigma = std::sqrt(ss / count);
    }
    stats.histogram = make_histogram(stats.offsets, options.bins);
    return stats;
}

double pelgrom_pair_sigma(const GeometrySet& geoms, const MismatchModel& model) {
    const auto& mp4 = geoms.at("Mp4");
    return std::sqrt(2.0) * model.avt / std::sqrt(mp4.w * mp4.l);
}

}  // namespace dyncomp
